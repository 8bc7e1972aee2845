"""
Time-step convergence study: the same scenario run to a fixed final time with
a sequence of time steps.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import logging
import math
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError

from .runner import run_scenario

logger = logging.getLogger(__name__)

CONVERGENCE_COLUMNS = ('dt', 'E_total_final', 'max_residual_ratio')


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    n_steps: int
    E_total_final: float
    max_residual_ratio: float

    def as_row(self):
        return [self.dt, self.E_total_final, self.max_residual_ratio]


def steps_for(dt, t_final, rtol=1e-9):
    """Number of steps of size dt reaching t_final; rejects non-multiples"""
    n = round(t_final / dt)
    if n < 1 or not math.isclose(n * dt, t_final, rel_tol=rtol):
        raise ValidationError(
            {'dts': f"Final time {t_final:g} is not a multiple of dt={dt:g}"}
        )
    return n


def _run_one(config):
    result = run_scenario(config)
    E0 = result.reports[0].E_total
    final = result.reports[-1].E_total
    ratio = result.max_residual / E0 if E0 else float('nan')
    return ConvergenceRow(config.dt, config.n_steps, final, ratio)


def convergence_study(config, dt_list, t_final, workers=1):
    """One run per time step to `t_final`; returns rows ordered as dt_list.

    Each run writes into `<output_dir>/dt_<dt>`. With workers > 1 the runs
    execute in separate processes.
    """
    dt_list = [float(dt) for dt in dt_list]
    if len(dt_list) < 2:
        raise ValidationError({'dts': "A convergence study needs at least two time steps"})
    if not t_final > 0.0:
        raise ValidationError({'tfinal': f"Final time must be positive, got {t_final}"})

    base = Path(config.output_dir)
    configs = [
        config.with_time_step(dt, steps_for(dt, t_final), output_dir=str(base / f'dt_{dt:g}'))
        for dt in dt_list
    ]
    logger.info("Convergence study of %s over dt=%s", config.scenario, dt_list)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, configs))
    else:
        rows = [_run_one(c) for c in configs]
    return rows


def successive_ratios(values):
    """|v_i - v_{i+1}| / |v_{i+1} - v_{i+2}| for a halving sequence"""
    diffs = np.abs(np.diff(np.asarray(values, dtype=float)))
    return diffs[:-1] / diffs[1:]


def write_convergence_table(rows, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.array([r.as_row() for r in rows], dtype=float), fmt='%.17g',
               delimiter=',', header=','.join(CONVERGENCE_COLUMNS), comments='')
    return path
