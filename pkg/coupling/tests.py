"""
Tests for the fluid-to-solid interpolation operator
"""

from django.test import SimpleTestCase
import numpy as np
import scipy.sparse as sp

from fem.elements import reference_element, shape_values
from fem.quadrature import quadrature_rule
from fsi_lab.exceptions import DimensionMismatchError, PointLocationError
from meshing.grids import build_fluid_grid
from meshing.solids import build_solid_mesh
from .interpolation import build_coupling, gather_to_fluid, interpolate_to_solid


class BuildCouplingTest(SimpleTestCase):
    """Test construction of the coupling matrix"""

    def setUp(self):
        self.grid = build_fluid_grid([(0.0, 1.0), (0.0, 1.0)], (8, 8), 'periodic')
        self.solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.04)
        self.P = build_coupling(self.grid, self.solid)

    def test_rows_sum_to_one(self):
        """Test the partition of unity on every row"""
        np.testing.assert_allclose(np.asarray(self.P.matrix.sum(axis=1)).ravel(), 1.0, atol=1e-13)

    def test_row_support(self):
        """Test each row touches at most one cell's nine nodes"""
        self.assertLessEqual(np.diff(self.P.matrix.indptr).max(), 9)
        self.assertEqual(self.P.shape, (self.solid.n_nodes, self.grid.n_velocity_nodes))

    def test_quadratic_reproduction(self):
        """Test sampling x^2 + y interpolates exactly at the solid nodes"""
        f = lambda p: p[:, 0] ** 2 + p[:, 1]
        values = interpolate_to_solid(self.P, f(self.grid.velocity_nodes)[:, None])
        np.testing.assert_allclose(values[:, 0], f(self.solid.current_coords), atol=1e-12)

    def test_coincident_node_gives_unit_row(self):
        """Test a solid node on a fluid velocity node yields a unit vector"""
        P = build_coupling(self.grid, np.array([[0.5625, 0.4375]]))
        row = P.matrix.toarray()[0]
        target = np.argmin(np.linalg.norm(self.grid.velocity_nodes - [0.5625, 0.4375], axis=1))
        expected = np.zeros_like(row)
        expected[target] = 1.0
        np.testing.assert_allclose(row, expected, atol=1e-14)

    def test_rebuild_is_identical(self):
        """Test rebuilding from the same coordinates gives the same matrix"""
        again = build_coupling(self.grid, self.solid)
        np.testing.assert_array_equal(again.matrix.indices, self.P.matrix.indices)
        np.testing.assert_array_equal(again.matrix.data, self.P.matrix.data)

    def test_outside_node(self):
        """Test solid nodes outside the grid are reported by index"""
        coords = np.array([[0.5, 0.5], [0.2, 1.3]])
        with self.assertRaises(PointLocationError) as ctx:
            build_coupling(self.grid, coords)
        self.assertEqual(ctx.exception.node, 1)


class ApplyCouplingTest(SimpleTestCase):
    """Test interpolation and transpose application"""

    def setUp(self):
        self.rng = np.random.default_rng(11)
        self.grid = build_fluid_grid([(0.0, 1.0), (0.0, 1.0)], (6, 6))
        self.solid = build_solid_mesh('disc', (0.45, 0.55), 0.2, 0.05)
        self.P = build_coupling(self.grid, self.solid)

    def test_linearity_and_translation(self):
        """Test linearity and that a uniform field is reproduced"""
        u = self.rng.normal(size=(self.grid.n_velocity_nodes, 2))
        v = self.rng.normal(size=(self.grid.n_velocity_nodes, 2))
        np.testing.assert_allclose(
            interpolate_to_solid(self.P, 2.0 * u - 3.0 * v),
            2.0 * interpolate_to_solid(self.P, u) - 3.0 * interpolate_to_solid(self.P, v),
            atol=1e-12,
        )
        uniform = np.tile([1.0, 0.0], (self.grid.n_velocity_nodes, 1))
        np.testing.assert_allclose(interpolate_to_solid(self.P, uniform),
                                   np.tile([1.0, 0.0], (self.solid.n_nodes, 1)), atol=1e-13)

    def test_duality(self):
        """Test <P u, w> = <u, P^T w>"""
        u = self.rng.normal(size=(self.grid.n_velocity_nodes, 2))
        w = self.rng.normal(size=(self.solid.n_nodes, 2))
        lhs = np.sum(interpolate_to_solid(self.P, u) * w)
        rhs = np.sum(u * gather_to_fluid(self.P, w))
        self.assertAlmostEqual(lhs / rhs, 1.0, places=12)

    def test_congruence_keeps_semidefinite(self):
        """Test P^T A P of a symmetric semidefinite block stays so"""
        n = 2 * self.solid.n_nodes
        root = sp.random(n, n, density=0.02, random_state=3, format='csr')
        A = (root.T @ root).tocsr()
        PAP = gather_to_fluid(self.P, A).toarray()
        np.testing.assert_allclose(PAP, PAP.T, atol=1e-12)
        self.assertGreater(np.linalg.eigvalsh(PAP).min(), -1e-10)

    def test_mass_triple_product(self):
        """Test u^T (P^T M_s P) u equals the quadrature of |P u|^2 on the solid"""
        elem = reference_element('p1_triangle')
        rule = quadrature_rule('p1_triangle', 2)
        values, _ = shape_values(elem, rule.points)
        mesh = self.solid
        measures = mesh.reference_measures
        local_mass = 2.0 * np.einsum('q,qa,qb->ab', rule.weights, values, values)
        rows = np.repeat(mesh.connectivity, 3, axis=1).ravel()
        cols = np.tile(mesh.connectivity, (1, 3)).ravel()
        data = (measures[:, None, None] * local_mass).ravel()
        M = sp.csr_matrix((data, (rows, cols)), shape=(mesh.n_nodes,) * 2)

        u = self.rng.normal(size=(self.grid.n_velocity_nodes, 1))
        us = interpolate_to_solid(self.P, u)[:, 0]
        at_points = values @ us[mesh.connectivity].T
        direct = np.sum(2.0 * measures * (rule.weights @ at_points ** 2))
        triple = float(u[:, 0] @ (gather_to_fluid(self.P, M) @ u[:, 0]))
        self.assertAlmostEqual(triple / direct, 1.0, places=12)

    def test_dimension_mismatch(self):
        """Test wrongly sized fields are rejected"""
        with self.assertRaises(DimensionMismatchError):
            interpolate_to_solid(self.P, np.zeros((5, 2)))
        with self.assertRaises(DimensionMismatchError):
            gather_to_fluid(self.P, np.zeros((5, 2)))
        with self.assertRaises(DimensionMismatchError):
            gather_to_fluid(self.P, sp.identity(7, format='csr'))
