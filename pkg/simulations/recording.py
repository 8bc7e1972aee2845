"""
Database bookkeeping for runs started from the command line.
"""

import logging

from .models import EnergyRecord, SimulationRun

logger = logging.getLogger(__name__)


def start_run(config):
    """Create the SimulationRun row for a resolved ScenarioConfig"""
    run = SimulationRun.objects.create(
        scenario=config.scenario,
        scheme=config.scheme,
        pressure_space=config.options.pressure_space,
        cells='x'.join(str(n) for n in config.cells_per_axis),
        dt=config.dt,
        n_steps=config.n_steps,
        output_dir=str(config.output_dir),
        config=config.as_dict(),
    )
    logger.info("Recording run %d", run.id)
    return run


class EnergyRecorder:
    """on_report callback storing each EnergyReport against a run"""

    def __init__(self, run):
        self.run = run

    def __call__(self, report, state):
        EnergyRecord.from_report(self.run, state.step_index, report).save()
