"""
Management command to run one scenario.

Exit status 2 means the configuration was rejected, 3 that the solver failed;
the time series of completed steps is written either way.
"""
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from fsi_lab.exceptions import DimensionMismatchError, FSIError, MeshError, StepFailure
from simulations.config import SCHEMES, cli_overrides, load_config
from simulations.presets import SCENARIOS
from simulations.recording import EnergyRecorder, start_run
from simulations.runner import run_scenario


def add_scenario_arguments(parser):
    """Flags shared by the scenario commands"""
    parser.add_argument('--scenario', choices=SCENARIOS, help='Scenario preset')
    parser.add_argument('--config', help='Scenario file of section.key=value lines')
    parser.add_argument('--nx', type=int, help='Cells along x (and y, z unless given)')
    parser.add_argument('--ny', type=int, help='Cells along y')
    parser.add_argument('--nz', type=int, help='Cells along z')
    parser.add_argument('--scheme', choices=SCHEMES, help='Time discretization')
    parser.add_argument('--bc', choices=['periodic', 'noslip', 'symmetry'],
                        help='Boundary condition on every face')
    parser.add_argument('--out', help='Output directory')
    parser.add_argument('--lenient', action='store_true',
                        help='Warn instead of failing when the fixed point stalls')


def resolve_config(options, **extra):
    """load_config with command errors mapped to exit status 2"""
    overrides = cli_overrides(options)
    overrides.update({k: v for k, v in extra.items() if v is not None})
    try:
        return load_config(path=options.get('config'), overrides=overrides)
    except ValidationError as exc:
        raise CommandError(f"Invalid configuration: {'; '.join(exc.messages)}", returncode=2)


class Command(BaseCommand):
    help = 'Run a fluid-structure scenario and write its energy time series and fields'

    def add_arguments(self, parser):
        add_scenario_arguments(parser)
        parser.add_argument('--dt', type=float, help='Time step')
        parser.add_argument('--steps', type=int, help='Number of time steps')
        parser.add_argument('--pressure', choices=['p1', 'p1_p0'], help='Pressure space')
        parser.add_argument('--stride', type=int, help='Write fields every N steps (0: final only)')
        parser.add_argument('--no-record', action='store_true',
                            help='Do not store the run in the database')

    def handle(self, *args, **options):
        config = resolve_config(options)
        run = None
        if config.record and not options['no_record']:
            run = start_run(config)

        self.stdout.write(f'Running {config}')
        try:
            result = run_scenario(config, on_report=EnergyRecorder(run) if run else None)
        except StepFailure as exc:
            if run:
                run.mark_failed(exc.error, exc.step)
            raise CommandError(f'{exc} (partial output in {config.output_dir})', returncode=3)
        except (MeshError, DimensionMismatchError) as exc:
            if run:
                run.mark_failed(exc)
            raise CommandError(f'Invalid geometry: {exc}', returncode=2)
        except FSIError as exc:
            if run:
                run.mark_failed(exc)
            raise CommandError(f'Setup failed: {exc}', returncode=3)

        if run:
            run.mark_completed(len(result.violations))
        final = result.reports[-1]
        self.stdout.write(f'  Final E_ratio: {final.E_ratio}')
        self.stdout.write(f'  Max |mass variation|: {result.max_mass_variation:.3e}')
        self.stdout.write(f'  Energy bound violations: {len(result.violations)}')
        self.stdout.write(
            self.style.SUCCESS(f'Completed {config.n_steps} steps; output in {result.output_dir}')
        )
