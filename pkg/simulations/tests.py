"""
Tests for scenario configuration, result files, the runner and the commands
"""

from io import StringIO
import json
from pathlib import Path
import tempfile

from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, tag
import numpy as np

from assembly.params import PhysicalParams
from diagnostics.energy import TIMESERIES_COLUMNS, energy_report
from fsi_lab.exceptions import FixedPointDivergenceError, StepFailure
from meshing.grids import build_fluid_grid
from meshing.mesh_io import write_solid_mesh
from meshing.solids import build_solid_mesh
from timestepper.state import InitialCondition, initial_state
from .config import cli_overrides, load_config
from .convergence import convergence_study, steps_for, successive_ratios
from .models import EnergyRecord, SimulationRun
from .runner import TIMESERIES_FILE, run_scenario
from .writers import (
    _subcells, _vertex_pressure_on_velocity_lattice, read_timeseries, write_fields,
    write_timeseries,
)


def small_overrides(out, **extra):
    """A 4x4 periodic box with a coarse disc, fast enough for unit tests"""
    values = {
        'grid.nx': 4,
        'bc.mode': 'periodic',
        'solid.target_h': 0.1,
        'initial.kind': 'stream_function',
        'time.n_steps': 2,
        'output.dir': str(out),
    }
    values.update(extra)
    return values


def read_vtk_counts(path):
    """Counts declared by the POINTS, CELLS and CELL_TYPES lines of a legacy VTK file"""
    counts = {}
    for line in Path(path).read_text().splitlines():
        words = line.split()
        if words and words[0] in ('POINTS', 'CELLS', 'CELL_TYPES', 'POINT_DATA', 'CELL_DATA'):
            counts[words[0]] = int(words[1])
    return counts


class TempDirMixin:
    def make_tempdir(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        return Path(tmp.name)


class PresetTest(SimpleTestCase):
    """Test the published parameters of each preset"""

    def test_activated_disc(self):
        """Test the activated disc parameters and geometry"""
        config = load_config('activated_disc')
        self.assertEqual(config.physical, PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0))
        self.assertEqual(config.cells_per_axis, (16, 16))
        self.assertEqual(set(config.boundary.values()), {'periodic'})
        self.assertEqual(config.initial.kind, 'stream_function')
        self.assertEqual(config.solid_radius, 0.2)
        self.assertEqual(config.solid_center, (0.5, 0.5))

    def test_stretched_disc(self):
        """Test the stretched disc parameters and its mixed boundaries"""
        config = load_config('stretched_disc')
        self.assertEqual(config.physical, PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=2.0, c1=2.0))
        self.assertEqual(config.boundary,
                         {'x-': 'symmetry', 'x+': 'wall', 'y-': 'symmetry', 'y+': 'wall'})
        self.assertEqual(config.stretch, 1.4)
        self.assertEqual(config.initial.kind, 'stretched')

    def test_oscillating_ball(self):
        """Test the ball octant box, resolution and orientation"""
        config = load_config('oscillating_ball')
        self.assertEqual(config.physical, PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0))
        self.assertEqual(config.extents, ((0.0, 0.5), (0.0, 0.5), (0.0, 0.3)))
        self.assertEqual(config.cells_per_axis, (8, 8, 5))
        self.assertEqual(config.octant_signs, (-1, -1, -1))
        self.assertEqual(set(config.boundary.values()), {'symmetry'})

    def test_preset_solids_fit_their_grids(self):
        """Test every preset solid lies inside its fluid box"""
        for name in ('activated_disc', 'stretched_disc', 'oscillating_ball'):
            config = load_config(name)
            grid = config.build_grid()
            solid = config.build_solid()
            coords = solid.current_coords
            self.assertTrue(np.all(coords >= grid.lower - 1e-12), name)
            self.assertTrue(np.all(coords <= grid.upper + 1e-12), name)


class ConfigTest(TempDirMixin, SimpleTestCase):
    """Test configuration layering and validation"""

    def write_file(self, text):
        path = self.make_tempdir() / 'scenario.env'
        path.write_text(text)
        return path

    def test_file_overrides_preset_and_flags_override_file(self):
        """Test preset < file < command line"""
        path = self.write_file(
            "scenario=activated_disc\n"
            "# resolution\n"
            "grid.nx=20\n"
            "time.dt=0.005\n"
            "solver.pressure_space=p1_p0\n"
            "output.record=off\n"
        )
        config = load_config(path=path, overrides={'time.dt': 0.002})
        self.assertEqual(config.scenario, 'activated_disc')
        self.assertEqual(config.cells_per_axis, (20, 20))
        self.assertEqual(config.dt, 0.002)
        self.assertEqual(config.options.pressure_space, 'p1_p0')
        self.assertFalse(config.record)
        self.assertEqual(config.physical.rho_s, 1.5)

    def test_list_values(self):
        """Test comma-separated values are cast per item"""
        path = self.write_file("grid.extents=0,2,0,1\nsolid.center=1.0,0.5\n")
        config = load_config(path=path)
        self.assertEqual(config.extents, ((0.0, 2.0), (0.0, 1.0)))
        self.assertEqual(config.solid_center, (1.0, 0.5))

    def test_unknown_key_rejected(self):
        """Test a misspelt key is a configuration error"""
        path = self.write_file("physical.rho=1.0\n")
        with self.assertRaises(ValidationError) as ctx:
            load_config(path=path)
        self.assertIn('physical.rho', ctx.exception.message_dict)

    def test_invalid_values_rejected(self):
        """Test zero steps, a non-positive dt and a malformed number"""
        with self.assertRaises(ValidationError) as ctx:
            load_config('activated_disc', overrides={'time.n_steps': 0, 'time.dt': -1.0})
        self.assertIn('time.n_steps', ctx.exception.message_dict)
        self.assertIn('time.dt', ctx.exception.message_dict)
        with self.assertRaises(ValidationError):
            load_config('activated_disc', overrides={'time.dt': 'fast'})

    def test_invalid_physics_rejected(self):
        """Test parameter errors are reported under their keys"""
        with self.assertRaises(ValidationError) as ctx:
            load_config(overrides={'physical.rho_f': 0.0})
        self.assertIn('physical.rho_f', ctx.exception.message_dict)

    def test_missing_file(self):
        """Test a missing scenario file is a configuration error"""
        with self.assertRaises(ValidationError):
            load_config(path='/nonexistent/scenario.env')

    def test_command_line_boundary(self):
        """Test --bc replaces the preset's per-face tags"""
        overrides = cli_overrides({'scenario': 'stretched_disc', 'bc': 'noslip', 'nx': 10})
        config = load_config(overrides=overrides)
        self.assertEqual(set(config.boundary.values()), {'wall'})
        self.assertEqual(config.cells_per_axis, (10, 10))

    def test_solid_must_match_grid_dimension(self):
        """Test a disc in a 3D box and a ball octant in a 2D box are rejected"""
        path = self.write_file("grid.extents=0,1,0,1,0,1\nsolid.shape=disc\n")
        with self.assertRaises(ValidationError) as ctx:
            load_config('activated_disc', path=path)
        self.assertIn('solid.shape', ctx.exception.message_dict)
        with self.assertRaises(ValidationError) as ctx:
            load_config('activated_disc', overrides={'solid.shape': 'ball_octant'})
        self.assertIn('solid.shape', ctx.exception.message_dict)
        with self.assertRaises(ValidationError) as ctx:
            load_config('oscillating_ball', overrides={'solid.center': '0.5,0.5'})
        self.assertIn('solid.center', ctx.exception.message_dict)

    def test_record_copy_is_json(self):
        """Test the stored configuration survives JSON encoding"""
        config = load_config('oscillating_ball')
        data = json.loads(json.dumps(config.as_dict()))
        self.assertEqual(data['physical']['c1'], 1.0)
        self.assertEqual(data['cells_per_axis'], [8, 8, 5])


class TimeseriesFileTest(TempDirMixin, SimpleTestCase):
    """Test the energy time series file"""

    def setUp(self):
        self.params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        self.grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'periodic')
        self.solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.1)

    def test_single_report(self):
        """Test one report gives a header and one row starting with ratio 1"""
        state = initial_state(self.grid, self.solid, self.params, InitialCondition('stream_function'))
        report = energy_report(state, self.grid, self.params)
        path = write_timeseries([report], self.make_tempdir() / 'series.csv')
        lines = path.read_text().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(lines[0], ','.join(TIMESERIES_COLUMNS))
        data = read_timeseries(path)
        self.assertEqual(data['E_ratio'][0], 1.0)
        self.assertEqual(data['E_total'][0], report.E_total)
        self.assertEqual(data['E_k_fluid'][0], report.E_k_fluid)

    def test_empty_series_rejected(self):
        """Test an empty report list is refused"""
        with self.assertRaises(ValueError):
            write_timeseries([], self.make_tempdir() / 'series.csv')


class FieldFileTest(TempDirMixin, SimpleTestCase):
    """Test VTK snapshots"""

    def test_zero_state(self):
        """Test counts and all-zero arrays of a zero state"""
        params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        grid = build_fluid_grid([(0, 1), (0, 1)], (3, 4))
        solid = build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.1)
        state = initial_state(grid, solid, params, pressure_space='p1_p0')
        fluid_path, solid_path = write_fields(state, grid, self.make_tempdir() / 'snap')

        fluid = read_vtk_counts(fluid_path)
        self.assertEqual(fluid['POINTS'], grid.n_velocity_nodes)
        self.assertEqual(fluid['CELL_TYPES'], 4 * grid.n_cells)
        self.assertEqual(fluid['CELLS'], 4 * grid.n_cells)
        self.assertEqual(fluid['CELL_DATA'], 4 * grid.n_cells)
        solid_counts = read_vtk_counts(solid_path)
        self.assertEqual(solid_counts['POINTS'], solid.n_nodes)
        self.assertEqual(solid_counts['CELLS'], solid.n_elements)

        text = fluid_path.read_text()
        velocity = text.split('VECTORS velocity double\n')[1].split('SCALARS')[0]
        self.assertFalse(np.any(np.loadtxt(velocity.splitlines())))
        J = solid_path.read_text().split('LOOKUP_TABLE default\n')[1]
        np.testing.assert_allclose(np.loadtxt(J.splitlines()), 1.0)

    def test_subcells_cover_the_cell(self):
        """Test the linear sub-cells of a 3D grid use every Q2 node of a cell"""
        grid = build_fluid_grid([(0, 1), (0, 1), (0, 1)], (2, 2, 2))
        sub = _subcells(grid)
        self.assertEqual(sub.shape, (8 * grid.n_cells, 8))
        first = np.unique(sub[:8])
        np.testing.assert_array_equal(first, np.sort(grid.velocity_connectivity[0]))

    def test_pressure_interpolation(self):
        """Test the vertex pressure is reproduced exactly for a linear field"""
        grid = build_fluid_grid([(0, 2), (0, 1)], (4, 2))
        p = grid.pressure_vertex_nodes @ [1.5, -2.0] + 0.25
        fine = _vertex_pressure_on_velocity_lattice(grid, p)
        np.testing.assert_allclose(fine, grid.velocity_nodes @ [1.5, -2.0] + 0.25, atol=1e-14)


class RunnerTest(TempDirMixin, SimpleTestCase):
    """Test short scenario runs"""

    def test_short_run(self):
        """Test reports, files and the energy ratio of a two-step run"""
        out = self.make_tempdir()
        seen = []
        config = load_config(overrides=small_overrides(out))
        result = run_scenario(config, on_report=lambda report, state: seen.append(state.step_index))
        self.assertEqual(seen, [0, 1, 2])
        self.assertEqual(len(result.reports), 3)
        self.assertEqual(result.violations, [])
        for ratio in result.E_ratios:
            self.assertGreater(ratio, 0.0)
            self.assertLessEqual(ratio, 1.0 + 1e-8)
        self.assertEqual(len((out / TIMESERIES_FILE).read_text().splitlines()), 4)
        self.assertTrue((out / 'fields_final_fluid.vtk').exists())
        self.assertTrue((out / 'fields_final_solid.vtk').exists())

    def test_field_stride(self):
        """Test snapshots are written at the stride"""
        out = self.make_tempdir()
        config = load_config(overrides=small_overrides(out, **{'output.field_stride': 1}))
        run_scenario(config)
        for name in ('fields_0000', 'fields_0001', 'fields_0002'):
            self.assertTrue((out / f'{name}_fluid.vtk').exists(), name)

    def test_deterministic(self):
        """Test identical configurations give identical time series files"""
        texts = []
        for _ in range(2):
            out = self.make_tempdir()
            run_scenario(load_config(overrides=small_overrides(out, **{'solver.scheme': 'explicit'})))
            texts.append((out / TIMESERIES_FILE).read_bytes())
        self.assertEqual(texts[0], texts[1])

    def test_failure_keeps_partial_output(self):
        """Test a failing step is reported with its index and earlier rows are kept"""
        out = self.make_tempdir()
        config = load_config(overrides=small_overrides(
            out, **{'solver.fp_max': 1, 'solver.fp_tol': 1e-30}))
        with self.assertRaises(StepFailure) as ctx:
            run_scenario(config)
        self.assertEqual(ctx.exception.step, 1)
        self.assertIsInstance(ctx.exception.error, FixedPointDivergenceError)
        self.assertEqual(len((out / TIMESERIES_FILE).read_text().splitlines()), 2)

    def test_lenient_fixed_point(self):
        """Test lenient runs continue past the iteration limit"""
        out = self.make_tempdir()
        config = load_config(overrides=small_overrides(
            out, **{'solver.fp_max': 1, 'solver.fp_tol': 1e-30, 'solver.lenient': True}))
        with self.assertLogs('timestepper', level='WARNING'):
            result = run_scenario(config)
        self.assertEqual(len(result.reports), 3)


class ConvergenceTest(TempDirMixin, SimpleTestCase):
    """Test the convergence study driver"""

    def test_steps_for(self):
        """Test step counts and rejected final times"""
        self.assertEqual(steps_for(5e-3, 0.25), 50)
        self.assertEqual(steps_for(2e-2, 0.26), 13)
        with self.assertRaises(ValidationError):
            steps_for(2e-2, 0.25)

    def test_single_time_step_rejected(self):
        """Test at least two time steps are required"""
        config = load_config(overrides=small_overrides(self.make_tempdir()))
        with self.assertRaises(ValidationError):
            convergence_study(config, [1e-2], 0.02)

    def test_successive_ratios(self):
        """Test ratios of a first order sequence are two"""
        values = [1.0 + 0.04, 1.0 + 0.02, 1.0 + 0.01]
        np.testing.assert_allclose(successive_ratios(values), [2.0])

    def test_small_study(self):
        """Test one row per time step, each run to the final time"""
        out = self.make_tempdir()
        config = load_config(overrides=small_overrides(out))
        rows = convergence_study(config, [2e-2, 1e-2], 0.04)
        self.assertEqual([r.n_steps for r in rows], [2, 4])
        self.assertTrue((out / 'dt_0.02' / TIMESERIES_FILE).exists())
        self.assertTrue((out / 'dt_0.01' / TIMESERIES_FILE).exists())


class SimulationRunModelTest(TestCase):
    """Test run records"""

    def setUp(self):
        self.run = SimulationRun.objects.create(
            scenario='activated_disc', cells='16x16', dt=0.01, n_steps=50,
        )

    def test_string_representation(self):
        """Test the string representation of SimulationRun"""
        self.assertEqual(str(self.run), "activated_disc 16x16 dt=0.01 (running)")

    def test_status_changes(self):
        """Test completion and failure bookkeeping"""
        self.run.mark_failed(ValueError('boom'), step=3)
        self.run.refresh_from_db()
        self.assertEqual(self.run.status, 'failed')
        self.assertEqual(self.run.failed_step, 3)
        self.assertEqual(self.run.error_message, 'boom')
        self.assertIsNotNone(self.run.finished_at)
        self.run.mark_completed(violations=2)
        self.assertEqual(self.run.status, 'completed')
        self.assertEqual(self.run.energy_violations, 2)

    def test_energy_record_from_report(self):
        """Test records copy every report column"""
        params = PhysicalParams(rho_f=1.0, mu_f=0.01, rho_s=1.5, c1=1.0)
        grid = build_fluid_grid([(0, 1), (0, 1)], (4, 4), 'periodic')
        state = initial_state(grid, build_solid_mesh('disc', (0.5, 0.5), 0.2, 0.1), params)
        report = energy_report(state, grid, params)
        EnergyRecord.from_report(self.run, 0, report).save()
        record = self.run.final_energy()
        self.assertEqual(record.step, 0)
        self.assertEqual(record.E_total, 0.0)
        self.assertIsNone(record.E_ratio)


class CommandTest(TempDirMixin, TestCase):
    """Test the management commands and their exit statuses"""

    def test_run_command_records(self):
        """Test a recorded run stores one energy row per time level"""
        out = self.make_tempdir()
        call_command('run', scenario='activated_disc', nx=4, steps=1, out=str(out),
                     stdout=StringIO())
        run = SimulationRun.objects.get()
        self.assertEqual(run.status, 'completed')
        self.assertEqual(run.cells, '4x4')
        self.assertEqual(run.energy_records.count(), 2)
        self.assertEqual(run.energy_records.first().E_ratio, 1.0)
        self.assertTrue((out / TIMESERIES_FILE).exists())

    def test_run_without_record(self):
        """Test --no-record leaves the database alone"""
        out = self.make_tempdir()
        call_command('run', scenario='activated_disc', nx=4, steps=1, out=str(out),
                     no_record=True, stdout=StringIO())
        self.assertFalse(SimulationRun.objects.exists())

    def test_configuration_error_status(self):
        """Test an invalid configuration exits with status 2"""
        with self.assertRaises(CommandError) as ctx:
            call_command('run', scenario='activated_disc', steps=0)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_solver_failure_status(self):
        """Test a failing step exits with status 3 and marks the run failed"""
        out = self.make_tempdir()
        scenario = out / 'strict.env'
        scenario.write_text("solver.fp_max=1\nsolver.fp_tol=1e-30\n")
        with self.assertRaises(CommandError) as ctx:
            call_command('run', scenario='activated_disc', nx=4, steps=2, out=str(out),
                         config=str(scenario), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 3)
        run = SimulationRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertEqual(run.failed_step, 1)

    def test_solid_dimension_mismatch_status(self):
        """Test a 2D disc in a 3D box exits with status 2"""
        out = self.make_tempdir()
        scenario = out / 'box.env'
        scenario.write_text("grid.extents=0,1,0,1,0,1\nsolid.shape=disc\n")
        with self.assertRaises(CommandError) as ctx:
            call_command('run', scenario='activated_disc', config=str(scenario),
                         out=str(out), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertFalse(SimulationRun.objects.exists())

    def test_mesh_file_dimension_mismatch_status(self):
        """Test a 2D mesh file in a 3D box exits with status 2 and marks the run failed"""
        out = self.make_tempdir()
        mesh_path = write_solid_mesh(build_solid_mesh('disc', (0.25, 0.25), 0.1, 0.05),
                                     out / 'disc.mesh')
        scenario = out / 'box.env'
        scenario.write_text(f"solid.mesh_file={mesh_path}\n")
        with self.assertRaises(CommandError) as ctx:
            call_command('run', scenario='oscillating_ball', config=str(scenario), steps=1,
                         out=str(out), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertEqual(SimulationRun.objects.get().status, 'failed')

    def test_converge_rejects_single_dt(self):
        """Test the convergence command needs two time steps"""
        with self.assertRaises(CommandError) as ctx:
            call_command('converge', scenario='activated_disc', dts='1e-2', tfinal=0.25)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_converge_rejects_uneven_final_time(self):
        """Test the final time must be a multiple of every time step"""
        with self.assertRaises(CommandError) as ctx:
            call_command('converge', scenario='activated_disc', dts='2e-2,1e-2', tfinal=0.25)
        self.assertEqual(ctx.exception.returncode, 2)


@tag('slow')
class AcceptanceRunTest(TempDirMixin, SimpleTestCase):
    """Test scenario-scale runs of the three presets"""

    def assertEnergyBound(self, result):
        reports = result.reports
        E0 = reports[0].E_total
        for before, after in zip(reports, reports[1:]):
            self.assertLessEqual(after.E_ratio,
                                 before.E_ratio + (abs(after.R_step) + 1e-7 * E0) / E0)
        self.assertEqual(result.violations, [])

    def test_activated_disc(self):
        """Test 50 implicit steps keep the energy ratio in (0, 1 + 1e-8]"""
        config = load_config('activated_disc', overrides={'output.dir': str(self.make_tempdir())})
        result = run_scenario(config)
        self.assertEqual(len(result.reports), 51)
        for ratio in result.E_ratios:
            self.assertGreater(ratio, 0.0)
            self.assertLessEqual(ratio, 1.0 + 1e-8)
        self.assertEnergyBound(result)

    def test_time_step_convergence(self):
        """Test residual and energy ratios under time-step halving for both schemes"""
        dts = [2e-2, 1e-2, 5e-3]
        for scheme in ('implicit', 'explicit'):
            config = load_config('activated_disc', overrides={
                'output.dir': str(self.make_tempdir()), 'solver.scheme': scheme})
            rows = convergence_study(config, dts, 0.25)
            energy = successive_ratios([r.E_total_final for r in rows])
            for value in energy:
                self.assertGreaterEqual(value, 1.5, scheme)
                self.assertLessEqual(value, 3.0, scheme)
            if scheme == 'implicit':
                for coarse, fine in zip(rows, rows[1:]):
                    ratio = coarse.max_residual_ratio / fine.max_residual_ratio
                    self.assertGreaterEqual(ratio, 3.0)
                    self.assertLessEqual(ratio, 5.0)

    def test_enrichment_improves_mass(self):
        """Test the enriched pressure conserves the disc mass better"""
        variation = {}
        for space in ('p1', 'p1_p0'):
            config = load_config('activated_disc', overrides={
                'grid.nx': 25, 'time.dt': 5e-3, 'time.n_steps': 100,
                'solver.pressure_space': space, 'output.dir': str(self.make_tempdir())})
            variation[space] = run_scenario(config).max_mass_variation
        self.assertLess(variation['p1_p0'], variation['p1'])
        self.assertLess(variation['p1_p0'], 0.01)

    def test_stretched_disc(self):
        """Test the released ellipse converts stored energy to motion stably"""
        config = load_config('stretched_disc', overrides={'output.dir': str(self.make_tempdir())})
        result = run_scenario(config)
        self.assertEnergyBound(result)
        E_p = [r.E_p for r in result.reports]
        E_k = [r.E_k_fluid for r in result.reports]
        self.assertGreater(E_p[0], 0.0)
        self.assertLess(min(E_p[1:]), E_p[0])
        self.assertGreater(int(np.argmax(E_k)), 0)
        self.assertLess(result.max_mass_variation, 0.01)

    def test_oscillating_ball(self):
        """Test 20 steps of the ball octant"""
        config = load_config('oscillating_ball', overrides={'output.dir': str(self.make_tempdir())})
        result = run_scenario(config)
        self.assertEqual(len(result.reports), 21)
        self.assertEnergyBound(result)
