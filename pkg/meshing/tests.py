"""
Tests for the fluid grid, solid mesh generators and mesh files
"""

import math
import tempfile
from pathlib import Path

from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st
import numpy as np

from fsi_lab.exceptions import InvertedElementError, MeshError, PointLocationError
from .grids import build_fluid_grid, locate_point, locate_points
from .solids import (
    apply_stretch, build_solid_mesh, make_solid_mesh, signed_measures, solid_measure,
)
from .mesh_io import parse_solid_mesh, read_solid_mesh, write_solid_mesh


class FluidGridTest(SimpleTestCase):
    """Test structured grid construction"""

    def setUp(self):
        self.grid = build_fluid_grid([(0.0, 1.0), (0.0, 1.0)], (4, 3), 'periodic')

    def test_lattice_sizes(self):
        """Test velocity and pressure lattice sizes"""
        self.assertEqual(self.grid.n_velocity_nodes, 9 * 7)
        self.assertEqual(self.grid.n_pressure_vertices, 5 * 4)
        self.assertEqual(self.grid.velocity_connectivity.shape, (12, 9))
        self.assertEqual(self.grid.pressure_connectivity.shape, (12, 4))

    def test_x_runs_fastest(self):
        """Test node 1 is the neighbour of node 0 along x"""
        nodes = self.grid.velocity_nodes
        np.testing.assert_allclose(nodes[1], [0.125, 0.0])
        np.testing.assert_allclose(nodes[9], [0.0, 1.0 / 6.0])

    def test_cell_nodes_match_reference_order(self):
        """Test the first cell's velocity nodes follow the reference lattice"""
        cell = self.grid.cell_index((1, 2))
        corners = self.grid.velocity_nodes[self.grid.velocity_connectivity[cell]]
        np.testing.assert_allclose(corners[0], [0.25, 2.0 / 3.0])
        np.testing.assert_allclose(corners[8], [0.5, 1.0])
        np.testing.assert_allclose(corners[4], [0.375, 5.0 / 6.0])

    def test_three_dimensional_grid(self):
        """Test a 3D grid with mixed boundary tags"""
        grid = build_fluid_grid([(0, 0.5), (0, 0.5), (0, 0.3)], (8, 8, 5), 'symmetry')
        self.assertEqual(grid.velocity_shape, (17, 17, 11))
        self.assertEqual(grid.velocity_connectivity.shape, (320, 27))
        self.assertEqual(len(grid.face_nodes('z+')), 17 * 17)
        self.assertEqual(len(grid.face_nodes('x-', lattice='pressure')), 9 * 6)

    def test_invalid_requests(self):
        """Test bad cell counts, extents and boundary tags are rejected"""
        with self.assertRaises(MeshError):
            build_fluid_grid([(0, 1), (0, 1)], (0, 4))
        with self.assertRaises(MeshError):
            build_fluid_grid([(0, 1), (1, 1)], (4, 4))
        with self.assertRaises(MeshError):
            build_fluid_grid([(0, 1), (0, 1)], (4, 4), {'x-': 'periodic'})
        with self.assertRaises(MeshError):
            build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'slip')


class LocatePointTest(SimpleTestCase):
    """Test point location on the structured grid"""

    def setUp(self):
        self.grid = build_fluid_grid([(0.0, 1.0), (0.0, 1.0)], (50, 50))

    def test_example_point(self):
        """Test (0.51, 0.49) lands in cell (25, 24) at local (0, 0)"""
        cell, local = locate_point(self.grid, [0.51, 0.49])
        self.assertEqual(cell, (25, 24))
        np.testing.assert_allclose(local, [0.0, 0.0], atol=1e-9)

    def test_upper_boundary_clamps(self):
        """Test the upper corner belongs to the last cell at local (1, 1)"""
        cell, local = locate_point(self.grid, [1.0, 1.0])
        self.assertEqual(cell, (49, 49))
        np.testing.assert_allclose(local, [1.0, 1.0])

    def test_tolerance_outside(self):
        """Test points a rounding error outside are accepted, others raise"""
        cell, _ = locate_point(self.grid, [1.0 + 1e-14, 0.5])
        self.assertEqual(cell[0], 49)
        with self.assertRaises(PointLocationError) as ctx:
            locate_points(self.grid, [[0.5, 0.5], [1.01, 0.5]])
        self.assertEqual(ctx.exception.node, 1)

    @settings(max_examples=1000, deadline=None)
    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_location_inverts_mapping(self, x, y):
        """Test mapping the located local coordinates back returns the point"""
        cells, local = locate_points(self.grid, [[x, y]])
        self.assertTrue(np.all(np.abs(local) <= 1.0 + 1e-12))
        np.testing.assert_allclose(self.grid.to_global(cells, local)[0], [x, y], atol=1e-12)

    def test_random_points_round_trip(self):
        """Test 1000 random interior points map back to themselves"""
        rng = np.random.default_rng(11)
        grid = build_fluid_grid([(0.0, 2.0), (-1.0, 0.5)], (37, 23))
        points = rng.uniform(grid.lower, grid.upper, size=(1000, 2))
        cells, local = locate_points(grid, points)
        self.assertTrue(np.all(np.abs(local) <= 1.0 + 1e-12))
        np.testing.assert_allclose(grid.to_global(cells, local), points, rtol=1e-12, atol=1e-12)


class SolidMeshTest(SimpleTestCase):
    """Test solid mesh generation"""

    def test_disc_counts_and_area(self):
        """Test ring disc counts and area approaching pi r^2"""
        mesh = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.2 / 6)
        self.assertEqual(mesh.n_nodes, 1 + 3 * 6 * 7)
        self.assertEqual(mesh.n_elements, 6 * 36)
        self.assertTrue(np.all(mesh.reference_measures > 0.0))
        area = solid_measure(mesh, 'reference')
        self.assertLess(area, math.pi * 0.04)
        self.assertAlmostEqual(area, math.pi * 0.04, delta=0.01 * math.pi * 0.04)

    def test_quarter_disc(self):
        """Test quarter disc nodes stay in the first quadrant"""
        mesh = build_solid_mesh('quarter_disc', (0.0, 0.0), 0.4, 0.1)
        self.assertEqual(mesh.n_nodes, 1 + 4 * 6)
        self.assertEqual(mesh.n_elements, 2 * 16)
        self.assertTrue(np.all(mesh.reference_coords >= -1e-15))
        self.assertAlmostEqual(solid_measure(mesh), math.pi * 0.16 / 4, delta=0.01)

    def test_ball_octant(self):
        """Test the octant mesh counts, orientation and sign placement"""
        mesh = build_solid_mesh('ball_octant', (0.5, 0.5, 0.3), 0.2, 0.05,
                                octant_signs=(-1, -1, -1))
        self.assertEqual(mesh.n_nodes, 5 * 6 * 7 // 6)
        self.assertEqual(mesh.n_elements, 64)
        self.assertTrue(np.all(mesh.reference_coords <= np.array([0.5, 0.5, 0.3]) + 1e-15))
        radii = np.linalg.norm(mesh.reference_coords - [0.5, 0.5, 0.3], axis=1)
        self.assertLessEqual(radii.max(), 0.2 + 1e-12)
        volume = solid_measure(mesh, 'reference')
        self.assertLess(volume, math.pi * 0.2 ** 3 / 6)
        self.assertGreater(volume, 0.6 * math.pi * 0.2 ** 3 / 6)

    def test_disc_area_error_shrinks_with_refinement(self):
        """Test halving target_h cuts the disc area error at least threefold"""
        exact = math.pi * 0.2 ** 2
        errors = [abs(solid_measure(build_solid_mesh('disc', (0.5, 0.5), 0.2, h), 'reference')
                      - exact)
                  for h in (0.2 / 6, 0.2 / 12)]
        self.assertGreaterEqual(errors[0] / errors[1], 3.0)

    def test_ball_octant_volume_error_shrinks_with_refinement(self):
        """Test halving target_h cuts the octant volume error at least threefold"""
        exact = math.pi * 0.2 ** 3 / 6
        errors = [abs(solid_measure(build_solid_mesh('ball_octant', (0.5, 0.5, 0.3), 0.2, h),
                                    'reference') - exact)
                  for h in (0.2 / 6, 0.2 / 12)]
        self.assertGreaterEqual(errors[0] / errors[1], 3.0)

    def test_invalid_requests(self):
        """Test target sizes above the radius and unknown shapes are rejected"""
        with self.assertRaises(MeshError):
            build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.3)
        with self.assertRaises(MeshError):
            build_solid_mesh('square', (0.5, 0.5), 0.2, 0.1)
        with self.assertRaises(MeshError):
            build_solid_mesh('disc', (0.5, 0.5, 0.5), 0.2, 0.1)

    def test_orientation_is_fixed(self):
        """Test clockwise input triangles are reoriented"""
        mesh = make_solid_mesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])
        self.assertGreater(signed_measures(mesh.reference_coords, mesh.connectivity)[0], 0.0)

    def test_stretch_preserves_area(self):
        """Test diag(s, 1/s) keeps the area and leaves X unchanged"""
        mesh = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)
        stretched = apply_stretch(mesh, 1.4)
        np.testing.assert_array_equal(stretched.reference_coords, mesh.reference_coords)
        self.assertAlmostEqual(solid_measure(stretched, 'initial'),
                               solid_measure(mesh, 'reference'), places=12)
        self.assertAlmostEqual(stretched.initial_coords[:, 0].max(), 0.5 + 0.28, places=12)

    def test_inverted_current_configuration(self):
        """Test a mirrored current configuration is reported"""
        mesh = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.1)
        mirrored = mesh.with_current(mesh.reference_coords * [-1.0, 1.0])
        with self.assertRaises(InvertedElementError):
            solid_measure(mirrored)
        with self.assertRaises(MeshError):
            mesh.with_current(mesh.reference_coords[:-1])


class MeshFileTest(SimpleTestCase):
    """Test the plain-text mesh format"""

    def test_write_read_is_exact(self):
        """Test coordinates survive a file cycle bit for bit"""
        mesh = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)
        with tempfile.TemporaryDirectory() as tmp:
            path = write_solid_mesh(mesh, Path(tmp) / 'disc.mesh')
            first_line = path.read_text().splitlines()[0]
            loaded = read_solid_mesh(path)
        self.assertEqual(first_line, f"2 {mesh.n_nodes} {mesh.n_elements}")
        np.testing.assert_array_equal(loaded.reference_coords, mesh.reference_coords)
        np.testing.assert_array_equal(loaded.connectivity, mesh.connectivity)

    def test_one_based_connectivity(self):
        """Test element lines are read as 1-based node numbers"""
        coords, conn = parse_solid_mesh("2 3 1\n0 0\n1 0\n0 1\n1 2 3\n")
        np.testing.assert_array_equal(conn, [[0, 1, 2]])
        self.assertEqual(coords.shape, (3, 2))

    def test_malformed_files(self):
        """Test truncated or missing files raise MeshError"""
        with self.assertRaises(MeshError):
            parse_solid_mesh("2 3 1\n0 0\n1 0\n")
        with self.assertRaises(MeshError):
            parse_solid_mesh("two 3 1\n")
        with self.assertRaises(MeshError):
            read_solid_mesh('/nonexistent/solid.mesh')
