"""
Management command comparing the plain and enriched pressure spaces on one scenario.
"""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from fsi_lab.exceptions import DimensionMismatchError, FSIError, MeshError
from simulations.runner import run_scenario
from .run import add_scenario_arguments, resolve_config


class Command(BaseCommand):
    help = 'Run a scenario with p1 and p1_p0 pressures and compare solid mass conservation'

    def add_arguments(self, parser):
        add_scenario_arguments(parser)
        parser.add_argument('--dt', type=float, help='Time step')
        parser.add_argument('--steps', type=int, help='Number of time steps')

    def handle(self, *args, **options):
        if not options['scenario'] and not options['config']:
            options['scenario'] = 'activated_disc'
        base = resolve_config(options)

        results = {}
        for space in ('p1', 'p1_p0'):
            config = resolve_config(options, **{
                'solver.pressure_space': space,
                'output.dir': str(Path(base.output_dir) / space),
            })
            try:
                results[space] = run_scenario(config)
            except (MeshError, DimensionMismatchError) as exc:
                raise CommandError(f'Invalid geometry: {exc}', returncode=2)
            except FSIError as exc:
                raise CommandError(f'{space} run failed: {exc}', returncode=3)

        self.stdout.write('pressure, max|mass variation|, final E_ratio')
        for space, result in results.items():
            self.stdout.write(
                f'{space}, {result.max_mass_variation:.6e}, {result.reports[-1].E_ratio}'
            )
        if results['p1_p0'].max_mass_variation < results['p1'].max_mass_variation:
            self.stdout.write(self.style.SUCCESS('Enrichment improves mass conservation'))
        else:
            self.stdout.write(self.style.WARNING('Enrichment did not improve mass conservation'))
