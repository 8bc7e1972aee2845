"""
Management command for the time-step convergence study.
"""
from decouple import Csv
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from fsi_lab.exceptions import DimensionMismatchError, FSIError, MeshError, StepFailure
from simulations.convergence import convergence_study, successive_ratios, write_convergence_table
from .run import add_scenario_arguments, resolve_config


class Command(BaseCommand):
    help = 'Run a scenario to a fixed final time for several time steps'

    def add_arguments(self, parser):
        add_scenario_arguments(parser)
        parser.add_argument('--dts', required=True, help='Comma-separated time steps, e.g. 2e-2,1e-2,5e-3')
        parser.add_argument('--tfinal', type=float, required=True, help='Final time')
        parser.add_argument('--pressure', choices=['p1', 'p1_p0'], help='Pressure space')
        parser.add_argument('--workers', type=int, default=1, help='Parallel runs (default: 1)')

    def handle(self, *args, **options):
        try:
            dts = Csv(cast=float)(options['dts'])
        except ValueError:
            raise CommandError(f"Invalid --dts: {options['dts']}", returncode=2)
        config = resolve_config(options)

        try:
            rows = convergence_study(config, dts, options['tfinal'], options['workers'])
        except ValidationError as exc:
            raise CommandError(f"Invalid study: {'; '.join(exc.messages)}", returncode=2)
        except (MeshError, DimensionMismatchError) as exc:
            raise CommandError(f'Invalid geometry: {exc}', returncode=2)
        except (StepFailure, FSIError) as exc:
            raise CommandError(str(exc), returncode=3)

        path = write_convergence_table(rows, f'{config.output_dir}/convergence.csv')
        self.stdout.write('dt, E_total(T), max|R|/E0')
        for row in rows:
            self.stdout.write(f'{row.dt:g}, {row.E_total_final:.10e}, {row.max_residual_ratio:.3e}')
        if len(rows) > 2:
            energy = successive_ratios([r.E_total_final for r in rows])
            self.stdout.write(f'  E_total difference ratios: {", ".join(f"{v:.3f}" for v in energy)}')
        residual = [a.max_residual_ratio / b.max_residual_ratio
                    for a, b in zip(rows, rows[1:]) if b.max_residual_ratio]
        if residual:
            self.stdout.write(f'  Residual ratios: {", ".join(f"{v:.3f}" for v in residual)}')
        self.stdout.write(self.style.SUCCESS(f'Convergence table written to {path}'))
