"""
Result files: the energy time series and VTK snapshots of the fields.

The time series is comma-separated text with one header line and one row per
EnergyReport, all values with 17 significant digits. Field snapshots are VTK
legacy ASCII unstructured grids; each Q2 fluid cell is written as 2^d linear
cells over its nine (or 27) nodes.
"""

import logging
from pathlib import Path

import numpy as np

from diagnostics.energy import TIMESERIES_COLUMNS

logger = logging.getLogger(__name__)

VTK_QUAD = 9
VTK_HEXAHEDRON = 12
VTK_TRIANGLE = 5
VTK_TETRA = 10


def write_timeseries(reports, path):
    """Write EnergyReports to `path`; an absent energy ratio is written as nan"""
    if not reports:
        raise ValueError("Cannot write an empty time series")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.array([
        [np.nan if value is None else value for value in report.as_row()]
        for report in reports
    ], dtype=float)
    np.savetxt(path, rows, fmt='%.17g', delimiter=',',
               header=','.join(TIMESERIES_COLUMNS), comments='')
    logger.debug("Wrote %d rows to %s", len(rows), path)
    return path


def read_timeseries(path):
    """Column name -> float array"""
    path = Path(path)
    with open(path) as handle:
        header = handle.readline().strip().split(',')
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def _pad3(coords):
    coords = np.atleast_2d(coords)
    if coords.shape[1] == 3:
        return coords
    return np.hstack([coords, np.zeros((len(coords), 3 - coords.shape[1]))])


def _subcells(grid):
    """Linear sub-cells of every Q2 cell, as rows of velocity node numbers"""
    dim = grid.dim
    if dim == 2:
        corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    else:
        corners = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
                   (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)]
    strides = 3 ** np.arange(dim)
    local = []
    for offset in np.ndindex(*(2,) * dim):
        local.append([int(np.dot(np.add(offset, c), strides)) for c in corners])
    conn = grid.velocity_connectivity[:, np.array(local)]
    return conn.reshape(-1, len(corners))


def _vertex_pressure_on_velocity_lattice(grid, p_vertex):
    """Multilinear interpolation of the vertex pressure onto the Q2 node lattice"""
    values = np.asarray(p_vertex, dtype=float).reshape(grid.pressure_shape, order='F')
    for axis in range(grid.dim):
        values = np.moveaxis(values, axis, 0)
        fine = np.empty((2 * values.shape[0] - 1,) + values.shape[1:])
        fine[0::2] = values
        fine[1::2] = 0.5 * (values[:-1] + values[1:])
        values = np.moveaxis(fine, 0, axis)
    return values.ravel(order='F')


def _write_header(handle, description, points):
    handle.write("# vtk DataFile Version 2.0\n")
    handle.write(description + "\n")
    handle.write("ASCII\n")
    handle.write("DATASET UNSTRUCTURED_GRID\n")
    handle.write(f"POINTS {len(points)} double\n")
    np.savetxt(handle, points, fmt='%.17g')


def _write_cells(handle, conn, cell_type):
    n, k = conn.shape
    handle.write(f"CELLS {n} {n * (k + 1)}\n")
    np.savetxt(handle, np.hstack([np.full((n, 1), k), conn]), fmt='%d')
    handle.write(f"CELL_TYPES {n}\n")
    np.savetxt(handle, np.full(n, cell_type), fmt='%d')


def _write_scalars(handle, name, values):
    handle.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
    np.savetxt(handle, np.asarray(values, dtype=float), fmt='%.17g')


def _write_vectors(handle, name, values):
    handle.write(f"VECTORS {name} double\n")
    np.savetxt(handle, _pad3(values), fmt='%.17g')


def write_fluid_vtk(state, grid, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    conn = _subcells(grid)
    n_vertex = grid.n_pressure_vertices
    pressure = _vertex_pressure_on_velocity_lattice(grid, state.p[:n_vertex])
    cell_pressure = np.asarray(state.p[n_vertex:], dtype=float)

    with open(path, 'w') as handle:
        _write_header(handle, f"fluid t={state.t:.17g}", _pad3(grid.velocity_nodes))
        _write_cells(handle, conn, VTK_QUAD if grid.dim == 2 else VTK_HEXAHEDRON)
        handle.write(f"POINT_DATA {grid.n_velocity_nodes}\n")
        _write_vectors(handle, 'velocity', state.u)
        _write_scalars(handle, 'pressure', pressure)
        if len(cell_pressure):
            handle.write(f"CELL_DATA {len(conn)}\n")
            _write_scalars(handle, 'pressure_cell', np.repeat(cell_pressure, 2 ** grid.dim))
    return path


def write_solid_vtk(state, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    solid = state.solid
    J = np.linalg.det(state.F)

    with open(path, 'w') as handle:
        _write_header(handle, f"solid t={state.t:.17g}", _pad3(solid.current_coords))
        _write_cells(handle, solid.connectivity, VTK_TRIANGLE if solid.dim == 2 else VTK_TETRA)
        handle.write(f"POINT_DATA {solid.n_nodes}\n")
        _write_vectors(handle, 'velocity', state.u_solid)
        handle.write(f"CELL_DATA {solid.n_elements}\n")
        _write_scalars(handle, 'J', J)
    return path


def write_fields(state, grid, path_prefix):
    """Write `<prefix>_fluid.vtk` and `<prefix>_solid.vtk`; returns both paths"""
    prefix = Path(path_prefix)
    fluid = write_fluid_vtk(state, grid, prefix.with_name(prefix.name + '_fluid.vtk'))
    solid = write_solid_vtk(state, prefix.with_name(prefix.name + '_solid.vtk'))
    logger.debug("Wrote fields of step %d to %s", state.step_index, prefix)
    return fluid, solid
