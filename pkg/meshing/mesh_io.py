"""
Plain-text solid mesh files.

Layout: a header line `dim nnodes nelems`, then one line of coordinates per
node, then one line of 1-based node numbers per element. Coordinates are
written with 17 significant digits so a write/read cycle is exact.
"""

import logging
from pathlib import Path

import numpy as np

from fsi_lab.exceptions import MeshError
from .solids import make_solid_mesh

logger = logging.getLogger(__name__)


def write_solid_mesh(mesh, path, configuration='reference'):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coords = mesh.coords(configuration)
    with open(path, 'w') as handle:
        handle.write(f"{mesh.dim} {mesh.n_nodes} {mesh.n_elements}\n")
        for row in coords:
            handle.write(' '.join('%.17g' % value for value in row) + '\n')
        for element in mesh.connectivity:
            handle.write(' '.join(str(int(n) + 1) for n in element) + '\n')
    logger.debug("Wrote %s to %s", mesh, path)
    return path


def parse_solid_mesh(text, source='<string>'):
    """Parse mesh text into (coords, connectivity) with 0-based node numbers"""
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if not lines:
        raise MeshError(f"{source}: empty mesh file")
    try:
        dim, n_nodes, n_elems = (int(v) for v in lines[0])
    except ValueError:
        raise MeshError(f"{source}: header must be 'dim nnodes nelems'")
    if dim not in (2, 3):
        raise MeshError(f"{source}: unsupported dimension {dim}")
    if len(lines) != 1 + n_nodes + n_elems:
        raise MeshError(
            f"{source}: expected {n_nodes} node and {n_elems} element lines, "
            f"found {len(lines) - 1} lines"
        )
    try:
        coords = np.array(lines[1:1 + n_nodes], dtype=float)
        conn = np.array(lines[1 + n_nodes:], dtype=np.int64) - 1
    except ValueError as exc:
        raise MeshError(f"{source}: malformed mesh data ({exc})")
    if coords.shape != (n_nodes, dim) or conn.shape != (n_elems, dim + 1):
        raise MeshError(f"{source}: rows do not match the declared dimension {dim}")
    return coords, conn


def read_solid_mesh(path):
    """Load a mesh file; the stored coordinates become both X and x0"""
    path = Path(path)
    if not path.exists():
        raise MeshError(f"Mesh file not found: {path}")
    coords, conn = parse_solid_mesh(path.read_text(), source=str(path))
    mesh = make_solid_mesh(coords, conn)
    logger.info("Loaded %s from %s", mesh, path)
    return mesh
