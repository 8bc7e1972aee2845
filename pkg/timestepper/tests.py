"""
Tests for initial conditions, kinematics, the saddle-point solve and both steppers
"""

from dataclasses import replace
import math

from django.test import SimpleTestCase
import numpy as np

from assembly.constraints import apply_constraints
from assembly.fluid import assemble_fluid_operator, divergence_matrix, mass_matrix
from assembly.params import PhysicalParams
from assembly.system import DofMap, merge_systems
from fsi_lab.exceptions import (
    DimensionMismatchError, FixedPointDivergenceError, InvertedElementError,
    SingularSystemError,
)
from meshing.grids import build_fluid_grid
from meshing.solids import apply_stretch, build_solid_mesh, make_solid_mesh
from .explicit import convection_substep, step_explicit
from .implicit import step_implicit
from .kinematics import (
    advance_deformation, deformation_from_coordinates, update_solid_configuration,
)
from .solver import solve_saddle_point
from .state import InitialCondition, StepOptions, initial_state, stream_function_velocity

ACTIVATED = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)


def solve_fluid(grid, params, dt, u_n, pressure_space='p1'):
    dof_map = DofMap.for_grid(grid, pressure_space)
    zero = np.zeros_like(u_n)
    fluid = assemble_fluid_operator(grid, params, dt, u_n, zero, pressure_space)
    system = apply_constraints(merge_systems(fluid, dof_map), grid)
    return solve_saddle_point(system, 1e-10)


class InitialStateTest(SimpleTestCase):
    """Test initial conditions"""

    def test_stream_function_value(self):
        """Test the velocity at (0.125, 0.25) for psi0 = 0.05, a = b = 2 pi"""
        u = stream_function_velocity([[0.125, 0.25]], 0.05, 2 * math.pi, 2 * math.pi)[0]
        self.assertAlmostEqual(u[0], 0.0, places=14)
        self.assertAlmostEqual(u[1], -0.05 * 2 * math.pi * math.cos(math.pi / 4), places=14)
        self.assertAlmostEqual(u[1], -0.22214, places=5)

    def test_no_penetration_and_divergence_free(self):
        """Test u_x vanishes on x = 0 and the field is divergence free"""
        rng = np.random.default_rng(2)
        ys = rng.uniform(0, 1, 10)
        wall = stream_function_velocity(np.column_stack([np.zeros(10), ys]), 0.05, 2 * math.pi, 2 * math.pi)
        np.testing.assert_allclose(wall[:, 0], 0.0, atol=1e-16)
        pts = rng.uniform(0, 1, size=(20, 2))
        h = 1e-6
        f = lambda p: stream_function_velocity(p, 0.05, 2 * math.pi, 2 * math.pi)
        div = ((f(pts + [h, 0])[:, 0] - f(pts - [h, 0])[:, 0])
               + (f(pts + [0, h])[:, 1] - f(pts - [0, h])[:, 1])) / (2 * h)
        np.testing.assert_allclose(div, 0.0, atol=1e-8)

    def test_three_dimensional_field_has_no_z_component(self):
        """Test the 3D field keeps w = 0"""
        u = stream_function_velocity(np.full((3, 3), 0.2), 0.05, 2 * math.pi, 2 * math.pi)
        np.testing.assert_array_equal(u[:, 2], 0.0)

    def test_stretched_initial_deformation(self):
        """Test F = diag(s, 1/s) and zero velocity for the stretched disc"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), {'x-': 'symmetry', 'y-': 'symmetry'})
        solid = apply_stretch(build_solid_mesh('quarter_disc', (0.0, 0.0), 0.4, 0.1), 1.4)
        state = initial_state(grid, solid, ACTIVATED, InitialCondition('stretched', stretch=1.4))
        np.testing.assert_allclose(state.F[0], np.diag([1.4, 1 / 1.4]))
        np.testing.assert_allclose(deformation_from_coordinates(state.solid), state.F, atol=1e-12)
        self.assertEqual(state.E_d_accum, 0.0)
        self.assertFalse(np.any(state.u))

    def test_solid_dimension_must_match_grid(self):
        """Test a 2D solid in a 3D grid raises DimensionMismatchError"""
        grid = build_fluid_grid([(0, 1), (0, 1), (0, 1)], (2, 2, 2))
        solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.1)
        with self.assertRaises(DimensionMismatchError):
            initial_state(grid, solid, ACTIVATED)


class KinematicsTest(SimpleTestCase):
    """Test solid configuration and F updates"""

    def setUp(self):
        self.solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)
        self.F = np.tile(np.eye(2), (self.solid.n_elements, 1, 1))

    def test_zero_velocity(self):
        """Test a zero velocity leaves coordinates and F unchanged"""
        solid, F = update_solid_configuration(self.solid, self.F, np.zeros((self.solid.n_nodes, 2)), 0.1)
        np.testing.assert_array_equal(solid.current_coords, self.solid.current_coords)
        np.testing.assert_array_equal(F, self.F)

    def test_rigid_translation(self):
        """Test a uniform velocity shifts the nodes and keeps F"""
        u = np.tile([1.0, 0.0], (self.solid.n_nodes, 1))
        solid, F = update_solid_configuration(self.solid, self.F, u, 0.01)
        np.testing.assert_allclose(solid.current_coords - self.solid.current_coords,
                                   np.tile([0.01, 0.0], (self.solid.n_nodes, 1)), atol=1e-15)
        np.testing.assert_allclose(F, self.F, atol=1e-13)

    def test_linear_velocity(self):
        """Test u = (a X, -a Y) on one element gives F' = diag(1 + a dt, 1 - a dt)"""
        mesh = make_solid_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
        u = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, -0.5]])
        _, F = update_solid_configuration(mesh, np.eye(2)[None], u, 0.1)
        np.testing.assert_allclose(F[0], np.diag([1.05, 0.95]), atol=1e-15)

    def test_accumulated_matches_coordinates(self):
        """Test accumulated F equals grad_X x after several affine updates"""
        rng = np.random.default_rng(4)
        solid, F = self.solid, self.F
        for _ in range(3):
            L = 0.2 * rng.normal(size=(2, 2))
            u = (solid.current_coords - 0.5) @ L.T
            solid, F = update_solid_configuration(solid, F, u, 0.05)
        np.testing.assert_allclose(deformation_from_coordinates(solid), F, atol=1e-12)

    def test_inversion_is_reported(self):
        """Test a velocity that folds the solid raises InvertedElementError"""
        u = np.column_stack([-(self.solid.current_coords[:, 0] - 0.5) * 30.0,
                             np.zeros(self.solid.n_nodes)])
        with self.assertRaises(InvertedElementError):
            update_solid_configuration(self.solid, self.F, u, 0.1)


class DeformationIdentityTest(SimpleTestCase):
    """Test the algebraic identities behind the energy estimate"""

    def setUp(self):
        self.rng = np.random.default_rng(1234)

    def test_trace_identity(self):
        """Test 1/2 |F1|^2 - 1/2 |F0|^2 = dt F1:G - dt^2/2 |G|^2"""
        for dt in (1.0, 0.1, 1e-3):
            for dim in (2, 3):
                F0 = self.rng.normal(size=(50, dim, dim))
                G = self.rng.normal(size=(50, dim, dim))
                F1 = advance_deformation(F0, G, dt)
                lhs = 0.5 * np.sum(F1 ** 2, axis=(1, 2)) - 0.5 * np.sum(F0 ** 2, axis=(1, 2))
                rhs = dt * np.sum(F1 * G, axis=(1, 2)) - 0.5 * dt ** 2 * np.sum(G ** 2, axis=(1, 2))
                scale = np.maximum(np.abs(lhs), np.abs(dt * np.sum(F1 * G, axis=(1, 2))))
                np.testing.assert_array_less(np.abs(lhs - rhs), 1e-13 * scale + 1e-15)

    def test_log_determinant_bound(self):
        """Test ln det F1 - ln det F0 >= dt tr(G F1^-1) - dt^2/2 |F1^-1 G|^2"""
        checked = 0
        while checked < 1000:
            dim = 2 + checked % 2
            F0 = np.eye(dim) + 0.4 * self.rng.normal(size=(dim, dim))
            if np.linalg.det(F0) <= 0.05:
                continue
            G = self.rng.normal(size=(dim, dim))
            dt = 10.0 ** self.rng.uniform(-3, 0)
            F1 = advance_deformation(F0, G, dt)
            if np.linalg.det(F1) <= 0.0:
                continue
            F1_inv = np.linalg.inv(F1)
            lhs = np.log(np.linalg.det(F1)) - np.log(np.linalg.det(F0))
            rhs = dt * np.trace(G @ F1_inv) - 0.5 * dt ** 2 * np.sum((F1_inv @ G) ** 2)
            self.assertGreaterEqual(lhs - rhs, -1e-12)
            checked += 1


class SaddlePointSolveTest(SimpleTestCase):
    """Test the constrained direct solve"""

    def setUp(self):
        self.rng = np.random.default_rng(8)
        self.params = PhysicalParams(rho_f=1.0, mu_f=1.0, rho_s=1.5, c1=1.0)

    def test_zero_rhs(self):
        """Test a zero right-hand side gives a zero solution"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'wall')
        u, p = solve_fluid(grid, self.params, 0.1, np.zeros((grid.n_velocity_nodes, 2)))
        self.assertFalse(np.any(u))
        self.assertFalse(np.any(p))

    def test_poiseuille_flow_is_exact(self):
        """Test the quadratic channel profile is recovered exactly with constant pressure"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4),
                                {'x-': 'periodic', 'x+': 'periodic'})
        y = grid.velocity_nodes[:, 1]
        exact = np.column_stack([y * (1 - y), np.zeros_like(y)])
        dt = 0.1
        u_n = exact + np.array([dt * 2.0 * self.params.mu_f / self.params.rho_f, 0.0])
        u, p = solve_fluid(grid, self.params, dt, u_n)
        np.testing.assert_allclose(u, exact, atol=1e-10)
        np.testing.assert_allclose(p, 0.0, atol=1e-9)

    def test_hydrostatic_pressure_is_exact(self):
        """Test a constant body force gives u = 0 and p = x + y - 1"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'wall')
        dt = 0.1
        u_n = np.full((grid.n_velocity_nodes, 2), dt / self.params.rho_f)
        u, p = solve_fluid(grid, self.params, dt, u_n)
        np.testing.assert_allclose(u, 0.0, atol=1e-10)
        x, y = grid.pressure_vertex_nodes.T
        np.testing.assert_allclose(p, x + y - 1.0, atol=1e-9)

    def test_enriched_pressure_solve(self):
        """Test the enriched space solves with zero discrete mean and zero divergence"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'wall')
        u_n = self.rng.normal(size=(grid.n_velocity_nodes, 2))
        u, p = solve_fluid(grid, self.params, 0.1, u_n, 'p1_p0')
        self.assertEqual(len(p), 25 + 16)
        B = divergence_matrix(grid, 'p1_p0')
        np.testing.assert_allclose(B @ u.ravel(order='F'), 0.0, atol=1e-10)

    def test_symmetry_face(self):
        """Test symmetry faces zero the normal velocity only"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'symmetry')
        u_n = self.rng.normal(size=(grid.n_velocity_nodes, 2))
        u, _ = solve_fluid(grid, self.params, 0.1, u_n)
        face = grid.face_nodes('x-')
        np.testing.assert_array_equal(u[face, 0], 0.0)
        self.assertGreater(np.abs(u[face, 1]).max(), 1e-6)

    def test_periodic_seam(self):
        """Test periodic partners carry identical values and the flow is discretely solenoidal"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'periodic')
        u_n = self.rng.normal(size=(grid.n_velocity_nodes, 2))
        u, _ = solve_fluid(grid, self.params, 0.1, u_n)
        np.testing.assert_array_equal(u[grid.face_nodes('x-')], u[grid.face_nodes('x+')])
        np.testing.assert_array_equal(u[grid.face_nodes('y-')], u[grid.face_nodes('y+')])
        B = divergence_matrix(grid, 'p1')
        np.testing.assert_allclose(B @ u.ravel(order='F'), 0.0, atol=1e-10)

    def test_singular_system(self):
        """Test a singular constrained matrix raises SingularSystemError"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (2, 2), 'wall')
        dof_map = DofMap.for_grid(grid)
        u_n = np.ones((grid.n_velocity_nodes, 2))
        zero = np.zeros_like(u_n)
        system = apply_constraints(
            merge_systems(assemble_fluid_operator(grid, self.params, 0.1, u_n, zero), dof_map), grid)
        broken = replace(system, matrix=system.matrix * 0.0)
        with self.assertRaises(SingularSystemError):
            solve_saddle_point(broken)


class StepperTest(SimpleTestCase):
    """Test the implicit and explicit steppers"""

    def setUp(self):
        self.grid = build_fluid_grid([(0, 1), (0, 1)], (8, 8), 'periodic')
        self.solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)

    def test_equilibrium_is_stationary(self):
        """Test u = 0, F = I is a fixed point of both steppers"""
        state = initial_state(self.grid, self.solid, ACTIVATED)
        for step in (step_implicit, step_explicit):
            nxt = step(state, self.grid, ACTIVATED, 0.01)
            self.assertFalse(np.any(nxt.u))
            np.testing.assert_array_equal(nxt.solid.current_coords, state.solid.current_coords)
            np.testing.assert_array_equal(nxt.F, state.F)
            self.assertEqual(nxt.E_d_accum, 0.0)
            self.assertEqual(nxt.step_index, 1)

    def test_implicit_step_converges(self):
        """Test one activated-disc step converges and stays discretely solenoidal"""
        init = InitialCondition('stream_function')
        state = initial_state(self.grid, self.solid, ACTIVATED, init)
        nxt = step_implicit(state, self.grid, ACTIVATED, 0.01)
        self.assertLessEqual(nxt.last_step.fp_iterations, 25)
        self.assertLess(nxt.last_step.fp_history[-1], 1e-8)
        self.assertGreater(nxt.E_d_accum, 0.0)
        self.assertAlmostEqual(nxt.t, 0.01)
        B = divergence_matrix(self.grid, 'p1')
        self.assertLess(np.abs(B @ nxt.u.ravel(order='F')).max(), 1e-10)
        self.assertGreater(np.abs(nxt.solid.current_coords - state.solid.current_coords).max(), 0.0)

    def test_fixed_point_limit(self):
        """Test hitting fp_max raises with the increment history, or warns when lenient"""
        init = InitialCondition('stream_function')
        state = initial_state(self.grid, self.solid, ACTIVATED, init)
        options = StepOptions(fp_max=1, fp_tol=1e-14)
        with self.assertRaises(FixedPointDivergenceError) as ctx:
            step_implicit(state, self.grid, ACTIVATED, 0.01, options)
        self.assertEqual(len(ctx.exception.history), 1)
        with self.assertLogs('timestepper.implicit', level='WARNING'):
            step_implicit(state, self.grid, ACTIVATED, 0.01, replace(options, lenient=True))

    def test_skew_convection_substep_does_not_add_energy(self):
        """Test the convection substep does not increase the discrete kinetic energy"""
        init = InitialCondition('stream_function')
        state = initial_state(self.grid, self.solid, ACTIVATED, init)
        dof_map = DofMap.for_grid(self.grid)
        u_half = convection_substep(state, self.grid, ACTIVATED, 0.01, StepOptions(), dof_map)
        M = mass_matrix(self.grid)
        energy = lambda u: sum(u[:, i] @ (M @ u[:, i]) for i in range(2))
        self.assertLessEqual(energy(u_half), energy(state.u) * (1 + 1e-12))

    def test_explicit_step_records_half_step(self):
        """Test the explicit step keeps the convection substep field"""
        init = InitialCondition('stream_function')
        state = initial_state(self.grid, self.solid, ACTIVATED, init)
        nxt = step_explicit(state, self.grid, ACTIVATED, 0.01)
        self.assertEqual(nxt.last_step.scheme, 'explicit')
        self.assertEqual(nxt.last_step.u_half.shape, state.u.shape)
        self.assertEqual(nxt.last_step.fp_iterations, 0)
