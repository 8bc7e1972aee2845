"""
Tests for energy components, residual terms and solid mass variation
"""

import math

from django.test import SimpleTestCase
import numpy as np

from assembly.params import PhysicalParams
from fsi_lab.exceptions import InvertedElementError
from meshing.grids import build_fluid_grid
from meshing.solids import build_solid_mesh
from timestepper.implicit import step_implicit
from timestepper.kinematics import advance_deformation
from timestepper.state import InitialCondition, initial_state
from .energy import energy_report, mass_variation, potential_energy
from .residuals import (
    divergence_gap, residual_explicit_terms, residual_implicit, splitting_residual,
    step_residuals,
)

ACTIVATED = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)


class PotentialEnergyTest(SimpleTestCase):
    """Test the stored elastic energy"""

    def test_identity_and_rotation(self):
        """Test F = I and rotations store no energy"""
        theta = 0.7
        R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        F = np.stack([np.eye(2), R])
        self.assertAlmostEqual(potential_energy(F, [0.3, 0.4], 1.0, 2), 0.0, places=14)

    def test_diagonal_stretch(self):
        """Test F = diag(2, 0.5) on a unit measure gives 1.125"""
        value = potential_energy(np.diag([2.0, 0.5])[None], [1.0], 1.0, 2)
        self.assertAlmostEqual(value, 1.125, places=14)

    def test_inverted(self):
        """Test det F <= 0 raises"""
        with self.assertRaises(InvertedElementError):
            potential_energy(np.diag([-1.0, 1.0])[None], [1.0], 1.0, 2)


class ResidualTest(SimpleTestCase):
    """Test the residual terms"""

    def setUp(self):
        self.rng = np.random.default_rng(21)

    def test_implicit_residual_values(self):
        """Test the hand-evaluated residual and its trivial cases"""
        F = np.diag([2.0, 0.5])[None]
        value = residual_implicit(F, np.eye(2)[None], [1.0], 1.0, 0.1)
        self.assertAlmostEqual(value, 0.01125, places=15)
        G = self.rng.normal(size=(4, 2, 2))
        self.assertEqual(residual_implicit(np.tile(np.eye(2), (4, 1, 1)), G, np.ones(4), 1.0, 0.1), 0.0)
        self.assertEqual(residual_implicit(np.tile(F[0], (4, 1, 1)), np.zeros((4, 2, 2)), np.ones(4), 1.0, 0.1), 0.0)

    def test_elastic_energy_change_is_bounded(self):
        """Test E_p(F1) - E_p(F0) <= c1 dt (F1:G - tr(G F1^-1)) + R per element"""
        checked = 0
        while checked < 300:
            F0 = np.eye(2) + 0.3 * self.rng.normal(size=(2, 2))
            G = self.rng.normal(size=(2, 2))
            dt = 0.05
            F1 = advance_deformation(F0, G, dt)
            if np.linalg.det(F0) <= 0.05 or np.linalg.det(F1) <= 0.05:
                continue
            change = potential_energy(F1[None], [1.0], 2.0, 2) - potential_energy(F0[None], [1.0], 2.0, 2)
            work = 2.0 * dt * (np.sum(F1 * G) - np.trace(G @ np.linalg.inv(F1)))
            R = residual_implicit(F1[None], G[None], [1.0], 2.0, dt)
            self.assertLessEqual(change, work + R + 1e-12)
            checked += 1

    def test_rigid_motion_has_no_divergence_gap(self):
        """Test a zero material gradient gives R_ex = 0"""
        F0 = np.tile(np.eye(2), (3, 1, 1))
        F1 = F0 + 0.1
        self.assertEqual(divergence_gap(F0, F1, np.zeros((3, 2, 2)), np.ones(3), 1.0, 0.01), 0.0)

    def test_zero_half_step_has_no_splitting_residual(self):
        """Test u_half = 0 gives R_split = 0"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (3, 3))
        u_next = self.rng.normal(size=(grid.n_velocity_nodes, 2))
        zero = np.zeros_like(u_next)
        self.assertEqual(splitting_residual(grid, zero, u_next, 1.0, 0.01), 0.0)

    def test_explicit_terms_need_half_step(self):
        """Test explicit residuals are refused for a state without substep data"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'periodic')
        state = initial_state(grid, build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.1), ACTIVATED)
        with self.assertRaises(ValueError):
            residual_explicit_terms(state, state, grid, ACTIVATED, 0.01)
        self.assertEqual(step_residuals(state, state, grid, ACTIVATED, 0.01).total, 0.0)


class EnergyReportTest(SimpleTestCase):
    """Test energy reports of scenario states"""

    def test_zero_state(self):
        """Test every component vanishes and the ratio is absent"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'periodic')
        state = initial_state(grid, build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.1), ACTIVATED)
        report = energy_report(state, grid, ACTIVATED)
        self.assertEqual(report.E_total, 0.0)
        self.assertIsNone(report.E_ratio)
        self.assertEqual(report.mass_variation, 0.0)

    def test_activated_disc_initial_energy(self):
        """Test the fluid kinetic energy of the stream-function field on a 32x32 grid"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (32, 32), 'periodic')
        solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)
        state = initial_state(grid, solid, ACTIVATED, InitialCondition('stream_function'))
        report = energy_report(state, grid, ACTIVATED)
        analytic = 0.5 * 0.05 ** 2 * 2 * (2 * math.pi) ** 2 / 4
        self.assertAlmostEqual(analytic, 0.024674, places=6)
        self.assertAlmostEqual(report.E_k_fluid / analytic, 1.0, delta=0.005)
        self.assertEqual(report.E_ratio, 1.0)
        self.assertAlmostEqual(report.E_total,
                               report.E_k_fluid + report.E_k_solid_delta + report.E_d + report.E_p)
        self.assertGreater(report.E_k_solid_delta, 0.0)

    def test_implicit_steps_do_not_gain_energy(self):
        """Test E_total(n+1) <= E_total(n) + R_{n+1} over several implicit steps"""
        grid = build_fluid_grid([(0, 1), (0, 1)], (8, 8), 'periodic')
        solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)
        state = initial_state(grid, solid, ACTIVATED, InitialCondition('stream_function'))
        first = energy_report(state, grid, ACTIVATED)
        previous = first
        dt = 0.01
        for _ in range(4):
            nxt = step_implicit(state, grid, ACTIVATED, dt)
            report = energy_report(nxt, grid, ACTIVATED, first.E_total,
                                   step_residuals(state, nxt, grid, ACTIVATED, dt))
            self.assertLessEqual(report.E_total,
                                 previous.E_total + report.R_step + 1e-9 * first.E_total)
            self.assertGreater(report.E_ratio, 0.0)
            previous, state = report, nxt

    def test_mass_variation_of_rigid_motion(self):
        """Test translating the solid keeps its measure"""
        solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.05)
        moved = solid.with_current(solid.current_coords + [0.1, -0.05])
        self.assertAlmostEqual(mass_variation(moved), 0.0, places=13)
        stretched = solid.with_current(solid.current_coords * [1.01, 1.0])
        self.assertAlmostEqual(mass_variation(stretched), 0.01, places=12)
