"""
Batch execution of a configured scenario.

The runner owns the output directory of a run: the energy time series is
rewritten when the run ends, successfully or not, and VTK snapshots are
written every `field_stride` steps plus once for the final state.
"""

from dataclasses import dataclass, field
import logging
from pathlib import Path

from diagnostics.energy import energy_report
from diagnostics.residuals import step_residuals
from fsi_lab.exceptions import FSIError, StepFailure
from timestepper.explicit import step_explicit
from timestepper.implicit import step_implicit
from timestepper.state import initial_state
from .writers import write_fields, write_timeseries

logger = logging.getLogger(__name__)

STEPPERS = {
    'implicit': step_implicit,
    'explicit': step_explicit,
}

TIMESERIES_FILE = 'timeseries.csv'


class EnergyMonitor:
    """Checks E_total(n+1) <= E_total(n) + R_{n+1} + slack after every step"""

    def __init__(self, initial_report, tolerance):
        self.previous = initial_report
        self.slack = tolerance * max(abs(initial_report.E_total), 1e-300)
        self.violations = []

    def check(self, report):
        bound = self.previous.E_total + report.R_step + self.slack
        ok = report.E_total <= bound
        if not ok:
            self.violations.append(report.t)
            logger.warning(
                "Energy bound violated at t=%.6g: E_total=%.17g exceeds %.17g",
                report.t, report.E_total, bound,
            )
        self.previous = report
        return ok


@dataclass
class RunResult:
    config: object
    state: object = field(repr=False)
    reports: list = field(repr=False)
    output_dir: Path = None
    violations: list = field(default_factory=list)

    @property
    def E_ratios(self):
        return [r.E_ratio for r in self.reports]

    @property
    def max_mass_variation(self):
        return max(abs(r.mass_variation) for r in self.reports)

    @property
    def max_residual(self):
        return max(abs(r.R_step) for r in self.reports)


def monitor_tolerance(options):
    """Relative slack for the energy monitor from the solver tolerances"""
    return 10.0 * max(options.fp_tol, options.solver_tol)


def run_scenario(config, on_report=None, write_output=True):
    """Run `config.n_steps` steps and return a RunResult.

    `on_report(report, state)` is called for the initial state and after every
    step. A failing step raises StepFailure carrying the step index, after the
    time series of the completed steps has been written.
    """
    grid = config.build_grid()
    solid = config.build_solid()
    params = config.physical
    options = config.options
    stepper = STEPPERS[config.scheme]
    output_dir = Path(config.output_dir)

    state = initial_state(grid, solid, params, config.initial, options.pressure_space)
    first = energy_report(state, grid, params)
    reports = [first]
    if on_report:
        on_report(first, state)
    monitor = EnergyMonitor(first, monitor_tolerance(options))
    if write_output and config.field_stride:
        write_fields(state, grid, output_dir / 'fields_0000')

    logger.info("Running %s", config)
    try:
        for n in range(1, config.n_steps + 1):
            try:
                following = stepper(state, grid, params, config.dt, options)
                residuals = step_residuals(state, following, grid, params, config.dt)
                report = energy_report(following, grid, params, first.E_total, residuals)
            except (FSIError, ValueError) as exc:
                logger.error("Step %d of %s failed: %s", n, config, exc)
                raise StepFailure(n, exc) from exc

            monitor.check(report)
            reports.append(report)
            state = following
            if on_report:
                on_report(report, state)
            logger.info(
                "Step %d t=%.4f E_ratio=%s fp=%d", n, report.t,
                'n/a' if report.E_ratio is None else f"{report.E_ratio:.10f}",
                state.last_step.fp_iterations,
            )
            if write_output and config.field_stride and n % config.field_stride == 0:
                write_fields(state, grid, output_dir / f'fields_{n:04d}')
    finally:
        if write_output:
            write_timeseries(reports, output_dir / TIMESERIES_FILE)

    if write_output:
        write_fields(state, grid, output_dir / 'fields_final')
    if monitor.violations:
        logger.warning("%d energy bound violations in %s", len(monitor.violations), config)
    return RunResult(config=config, state=state, reports=reports,
                     output_dir=output_dir, violations=monitor.violations)
