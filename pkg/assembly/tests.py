"""
Tests for parameter validation, operator assembly, merging and constraints
"""

from dataclasses import replace

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
import numpy as np
import scipy.sparse as sp

from coupling.interpolation import build_coupling
from fem.elements import reference_element, shape_values
from fem.mapping import physical_gradients
from fem.quadrature import quadrature_rule
from fsi_lab.exceptions import ConstraintConflictError, InvertedElementError
from meshing.grids import build_fluid_grid
from meshing.solids import build_solid_mesh, make_solid_mesh
from .constraints import apply_constraints, remove_pressure_mean, velocity_constraints
from .fluid import (
    QUADRATURE_ORDER, assemble_fluid_operator, convection_matrix, divergence_matrix,
    mass_matrix, viscous_matrix,
)
from .params import PhysicalParams
from .solid import (
    assemble_solid_operator, j_term_matrix, material_gradient, reference_gradients,
    stress_load,
)
from .system import DofMap, merge_systems


def unit_square(cells=4, bc='wall'):
    return build_fluid_grid([(0.0, 1.0), (0.0, 1.0)], (cells, cells), bc)


class PhysicalParamsTest(SimpleTestCase):
    """Test parameter validation"""

    def test_rho_delta(self):
        """Test the density difference"""
        params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        self.assertAlmostEqual(params.rho_delta, 0.5)

    def test_invalid_values(self):
        """Test non-physical values raise ValidationError"""
        with self.assertRaises(ValidationError) as ctx:
            PhysicalParams(rho_f=0.0, mu_f=-1.0, rho_s=1.0, c1=1.0)
        self.assertIn('rho_f', ctx.exception.message_dict)
        self.assertIn('mu_f', ctx.exception.message_dict)

    def test_light_solid_warns(self):
        """Test a negative density difference is a warning, not an error"""
        with self.assertLogs('assembly.params', level='WARNING'):
            params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=0.5, c1=1.0)
        self.assertLess(params.rho_delta, 0.0)


class FluidOperatorTest(SimpleTestCase):
    """Test the fluid blocks"""

    def setUp(self):
        self.rng = np.random.default_rng(5)
        self.grid = unit_square(3)
        self.params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        self.n = self.grid.n_velocity_nodes
        # u = (x^2, x y) is exactly representable in Q2
        x, y = self.grid.velocity_nodes.T
        self.quadratic = np.column_stack([x ** 2, x * y])

    def test_mass_integrates_area(self):
        """Test the mass matrix entries sum to the domain area"""
        self.assertAlmostEqual(mass_matrix(self.grid).sum(), 1.0, places=13)

    def test_symmetric_without_convection(self):
        """Test A_f is symmetric for a zero advecting field"""
        zero = np.zeros((self.n, 2))
        blocks = assemble_fluid_operator(self.grid, self.params, 0.01, zero, zero)
        diff = abs(blocks.A - blocks.A.T).max()
        self.assertLess(diff, 1e-13 * abs(blocks.A).max())

    def test_rigid_fields_have_no_strain(self):
        """Test K_D annihilates constants and rotations"""
        K = viscous_matrix(self.grid)
        x, y = self.grid.velocity_nodes.T
        constant = np.tile([1.0, 0.0], (self.n, 1)).ravel(order='F')
        rotation = np.column_stack([-y, x]).ravel(order='F')
        np.testing.assert_allclose(K @ constant, 0.0, atol=1e-12)
        np.testing.assert_allclose(K @ rotation, 0.0, atol=1e-12)

    def test_strain_energy_of_quadratic_field(self):
        """Test u^T K_D u = int D(u):D(u) = 22/3 for u = (x^2, x y)"""
        u = self.quadratic.ravel(order='F')
        self.assertAlmostEqual(u @ (viscous_matrix(self.grid) @ u), 22.0 / 3.0, places=11)

    def test_viscosity_scaling(self):
        """Test doubling mu doubles the viscous part exactly"""
        zero = np.zeros((self.n, 2))
        dt = 0.01
        base = assemble_fluid_operator(self.grid, self.params, dt, zero, zero).A
        doubled = assemble_fluid_operator(
            self.grid, replace(self.params, mu_f=0.02), dt, zero, zero).A
        np.testing.assert_allclose((doubled - base).toarray(),
                                   0.005 * viscous_matrix(self.grid).toarray(), atol=1e-13)

    def test_skew_convection_is_energy_neutral(self):
        """Test u^T C u = 0 for the skew form with a random advecting field"""
        w = self.rng.normal(size=(self.n, 2))
        C = convection_matrix(self.grid, w, 'skew')
        for _ in range(5):
            u = self.rng.normal(size=self.n)
            scale = np.abs(u) @ (abs(C) @ np.abs(u))
            self.assertLessEqual(abs(u @ (C @ u)), 1e-13 * scale)
        picard = convection_matrix(self.grid, w, 'picard')
        u = self.rng.normal(size=self.n)
        self.assertNotAlmostEqual(u @ (picard @ u), 0.0, places=6)

    def test_convection_of_quadratic(self):
        """Test sum_a N[a, :] u equals int (w . grad) u for w = (1, 0), u = x^2"""
        w = np.tile([1.0, 0.0], (self.n, 1))
        N = convection_matrix(self.grid, w, 'picard')
        u = self.quadratic[:, 0]
        self.assertAlmostEqual((N @ u).sum(), 1.0, places=12)

    def test_divergence_of_quadratic(self):
        """Test the pressure rows sum to -int div u = -1.5 for u = (x^2, x y)"""
        u = self.quadratic.ravel(order='F')
        B = divergence_matrix(self.grid, 'p1')
        self.assertAlmostEqual((B @ u).sum(), -1.5, places=12)
        Bc = divergence_matrix(self.grid, 'p1_p0')
        self.assertEqual(Bc.shape[0], self.grid.n_pressure_vertices + self.grid.n_cells)
        self.assertAlmostEqual((Bc @ u)[self.grid.n_pressure_vertices:].sum(), -1.5, places=12)

    def test_assembled_action_matches_cell_sums(self):
        """Test A u and B u equal per-cell quadrature sums for random u and w"""
        grid = build_fluid_grid([(0.0, 2.0), (0.0, 1.0)], (3, 2), 'wall')
        n = grid.n_velocity_nodes
        dt = 0.01
        u = self.rng.normal(size=(n, 2))
        w = self.rng.normal(size=(n, 2))
        blocks = assemble_fluid_operator(grid, self.params, dt, np.zeros((n, 2)), w)

        elem = reference_element('q2_quad')
        rule = quadrature_rule('q2_quad', QUADRATURE_ORDER)
        values, ref_grads = shape_values(elem, rule.points)
        pressure_values, _ = shape_values(reference_element('q1_quad'), rule.points)
        rho, mu = self.params.rho_f, self.params.mu_f
        Au = np.zeros((n, 2))
        Bu = np.zeros(grid.n_pressure_vertices)
        for cell, conn in enumerate(grid.velocity_connectivity):
            grads, det = physical_gradients(grid.velocity_nodes[conn][None], ref_grads)
            G, wq = grads[0], rule.weights * det[0]
            u_q = values @ u[conn]
            w_q = values @ w[conn]
            grad_u = np.einsum('qbj,bi->qij', G, u[conn])
            strain = grad_u + grad_u.transpose(0, 2, 1)
            mass = np.einsum('q,qa,qi->ai', wq, values, u_q)
            advect = np.einsum('q,qa,qj,qij->ai', wq, values, w_q, grad_u)
            advect_t = np.einsum('q,qi,qj,qaj->ai', wq, u_q, w_q, G)
            viscous = mu * np.einsum('q,qil,qal->ai', wq, strain, G)
            Au[conn] += (rho / dt) * mass + 0.5 * rho * (advect - advect_t) + viscous
            div_u = np.trace(grad_u, axis1=1, axis2=2)
            Bu[grid.pressure_connectivity[cell]] -= np.einsum('q,qp,q->p', wq,
                                                              pressure_values, div_u)

        u_flat = u.ravel(order='F')
        expected = Au.ravel(order='F')
        np.testing.assert_allclose(blocks.A @ u_flat, expected, rtol=0.0,
                                   atol=1e-12 * np.abs(expected).max())
        np.testing.assert_allclose(blocks.B @ u_flat, Bu, rtol=0.0,
                                   atol=1e-12 * np.abs(Bu).max())

    def test_invalid_time_step(self):
        """Test non-positive dt is rejected"""
        zero = np.zeros((self.n, 2))
        with self.assertRaises(ValueError):
            assemble_fluid_operator(self.grid, self.params, 0.0, zero, zero)


class SolidOperatorTest(SimpleTestCase):
    """Test the solid block and load on the reference mesh"""

    def setUp(self):
        self.rng = np.random.default_rng(17)
        self.params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        self.mesh = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)
        self.identity = np.tile(np.eye(2), (self.mesh.n_elements, 1, 1))

    def test_identity_deformation_has_no_load(self):
        """Test F_n = F_iterate = I gives a zero load for zero velocity"""
        zero = np.zeros((self.mesh.n_nodes, 2))
        blocks = assemble_solid_operator(self.mesh, self.identity, self.params, 0.01,
                                         zero, self.identity)
        np.testing.assert_array_equal(blocks.rhs, 0.0)

    def test_pure_fictitious_fluid(self):
        """Test c1 = 0 and rho_s = rho_f give an empty block"""
        params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.0, c1=0.0)
        u = self.rng.normal(size=(self.mesh.n_nodes, 2))
        blocks = assemble_solid_operator(self.mesh, self.identity, params, 0.01, u,
                                         self.identity, j_term='linearized')
        self.assertEqual(abs(blocks.A).max(), 0.0)
        np.testing.assert_array_equal(blocks.rhs, 0.0)

    def test_single_triangle_load(self):
        """Test the load of F_n = diag(2, 0.5) on the unit reference triangle"""
        mesh = make_solid_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
        F_n = np.array([np.diag([2.0, 0.5])])
        F_it = np.array([np.eye(2)])
        blocks = assemble_solid_operator(mesh, F_n, self.params, 0.1, np.zeros((3, 2)), F_it)
        np.testing.assert_allclose(blocks.rhs, [0.5, -0.5, 0.0, -0.25, 0.0, 0.25], atol=1e-15)

    def test_j_term_change_of_variables(self):
        """Test int tr(grad_X v F^-1) dX equals int J^-1 div v dx on the deformed element"""
        for _ in range(5):
            F = np.eye(2) + 0.3 * self.rng.normal(size=(2, 2))
            if np.linalg.det(F) <= 0.1:
                continue
            X = np.array([[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]])
            mesh = make_solid_mesh(X, [[0, 1, 2]])
            S = np.linalg.inv(F).T[None]
            reference_side = stress_load(mesh, S)
            x = mesh.reference_coords @ F.T
            p1_grads = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
            current_grads, det = physical_gradients(x, p1_grads)
            current_area = 0.5 * det
            J = np.linalg.det(F)
            current_side = (current_area / J) * current_grads.T.ravel()
            np.testing.assert_allclose(reference_gradients(mesh)[0],
                                       physical_gradients(X, p1_grads)[0], atol=1e-13)
            np.testing.assert_allclose(reference_side, current_side, atol=1e-12)

    def test_linearized_matrix_symmetric(self):
        """Test the linearized J-term matrix is symmetric"""
        F = self.identity + 0.1 * self.rng.normal(size=self.identity.shape)
        G = j_term_matrix(self.mesh, F)
        self.assertLess(abs(G - G.T).max(), 1e-13)

    def test_material_gradient_of_linear_field(self):
        """Test grad_X of u = (a X, -a Y) is diag(a, -a) on every element"""
        X = self.mesh.reference_coords
        u = np.column_stack([0.3 * X[:, 0], -0.3 * X[:, 1]])
        grad = material_gradient(self.mesh, u)
        np.testing.assert_allclose(grad, np.tile(np.diag([0.3, -0.3]), (len(grad), 1, 1)),
                                   atol=1e-12)

    def test_inverted_iterate(self):
        """Test an inverted iterate reports the element index"""
        F_it = self.identity.copy()
        F_it[3] = np.diag([-1.0, 1.0])
        zero = np.zeros((self.mesh.n_nodes, 2))
        with self.assertRaises(InvertedElementError) as ctx:
            assemble_solid_operator(self.mesh, self.identity, self.params, 0.01, zero, F_it)
        self.assertEqual(ctx.exception.element, 3)


class MergeSystemsTest(SimpleTestCase):
    """Test merging the solid block into the fluid system"""

    def setUp(self):
        self.grid = unit_square(4, 'periodic')
        self.params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        self.mesh = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)
        self.P = build_coupling(self.grid, self.mesh)
        self.dof_map = DofMap.for_grid(self.grid, 'p1')
        zero = np.zeros((self.grid.n_velocity_nodes, 2))
        self.fluid = assemble_fluid_operator(self.grid, self.params, 0.01, zero, zero)
        identity = np.tile(np.eye(2), (self.mesh.n_elements, 1, 1))
        self.solid = assemble_solid_operator(self.mesh, identity, self.params, 0.01,
                                             np.zeros((self.mesh.n_nodes, 2)), identity)

    def test_fluid_only_system(self):
        """Test merging without a solid keeps the fluid blocks"""
        system = merge_systems(self.fluid, self.dof_map)
        nv = self.dof_map.n_velocity
        self.assertEqual(system.size, self.dof_map.n_total)
        self.assertEqual(abs(system.matrix[:nv, :nv] - self.fluid.A).max(), 0.0)
        self.assertEqual(system.matrix[nv:, nv:].nnz, 0)

    def test_merged_system_symmetric(self):
        """Test the merged operator stays symmetric without convection or J-term"""
        system = merge_systems(self.fluid, self.dof_map, self.solid, self.P)
        self.assertLess(abs(system.matrix - system.matrix.T).max(), 1e-12)

    def test_sparsity_bound(self):
        """Test nnz(A) <= nnz(A_f) + nnz(P^T A_s P)"""
        system = merge_systems(self.fluid, self.dof_map, self.solid, self.P)
        nv = self.dof_map.n_velocity
        coupled = self.P.vector_operator().T @ self.solid.A @ self.P.vector_operator()
        self.assertLessEqual(system.matrix[:nv, :nv].nnz, self.fluid.A.nnz + coupled.nnz)


class ConstraintTest(SimpleTestCase):
    """Test constraint elimination"""

    def test_free_velocity_counts(self):
        """Test free unknown counts for wall, symmetry and periodic boxes"""
        counts = {}
        for bc in ('wall', 'symmetry', 'periodic'):
            dofs = velocity_constraints(unit_square(2, bc))
            counts[bc] = len(np.unique(dofs[dofs >= 0]))
        self.assertEqual(counts, {'wall': 18, 'symmetry': 30, 'periodic': 32})

    def test_symmetry_fixes_normal_component_only(self):
        """Test a symmetry face keeps the tangential component free"""
        grid = unit_square(2, {'x-': 'symmetry'})
        dofs = velocity_constraints(grid).reshape(2, -1)
        face = grid.face_nodes('x-')
        interior_face = face[1:-1]
        self.assertTrue(np.all(dofs[0, interior_face] == -1))
        self.assertTrue(np.all(dofs[1, interior_face] >= 0))

    def test_conflicting_periodic_partner(self):
        """Test a periodic face paired with a wall is a conflict"""
        grid = unit_square(2, 'wall')
        tags = dict(grid.boundary_tags, **{'x-': 'periodic'})
        with self.assertRaises(ConstraintConflictError):
            velocity_constraints(replace(grid, boundary_tags=tags))

    def test_enriched_pressure_pins_two(self):
        """Test the enriched space pins one vertex and one cell"""
        grid = unit_square(3, 'periodic')
        dof_map = DofMap.for_grid(grid, 'p1_p0')
        zero = np.zeros((grid.n_velocity_nodes, 2))
        params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        system = apply_constraints(
            merge_systems(assemble_fluid_operator(grid, params, 0.01, zero, zero, 'p1_p0'),
                          dof_map), grid)
        self.assertEqual(len(system.constraint_info.pinned_pressures), 2)
        free = 2 * 36 + (9 - 1) + (9 - 1)
        self.assertEqual(system.size, free)
        self.assertLess(abs(system.matrix - system.matrix.T).max(), 1e-12)

    def test_remove_pressure_mean(self):
        """Test a constant pressure is shifted to zero"""
        grid = unit_square(3)
        dof_map = DofMap.for_grid(grid, 'p1_p0')
        zero = np.zeros((grid.n_velocity_nodes, 2))
        params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        system = apply_constraints(
            merge_systems(assemble_fluid_operator(grid, params, 0.01, zero, zero, 'p1_p0'),
                          dof_map), grid)
        p = np.concatenate([np.full(16, 2.0), np.full(9, 0.5)])
        shifted = remove_pressure_mean(p, dof_map, system.constraint_info)
        np.testing.assert_allclose(shifted[:16] + 0.5, 0.0, atol=1e-14)
        np.testing.assert_allclose(shifted[16:], 0.5)
