# Generated by Django 5.2.5 on 2026-10-18 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='SimulationRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(max_length=50)),
                ('scheme', models.CharField(choices=[('implicit', 'Implicit'), ('explicit', 'Explicit')], default='implicit', max_length=20)),
                ('pressure_space', models.CharField(choices=[('p1', 'P1'), ('p1_p0', 'P1 + P0')], default='p1', max_length=10)),
                ('cells', models.CharField(help_text='Cells per axis, e.g. 16x16', max_length=30)),
                ('dt', models.FloatField()),
                ('n_steps', models.PositiveIntegerField()),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='running', max_length=20)),
                ('failed_step', models.PositiveIntegerField(blank=True, null=True)),
                ('error_message', models.TextField(blank=True)),
                ('energy_violations', models.PositiveIntegerField(default=0)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('config', models.JSONField(default=dict)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'db_table': 'simulation_runs',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='EnergyRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('step', models.PositiveIntegerField()),
                ('t', models.FloatField()),
                ('E_k_fluid', models.FloatField()),
                ('E_k_solid_delta', models.FloatField()),
                ('E_d', models.FloatField()),
                ('E_p', models.FloatField()),
                ('E_total', models.FloatField()),
                ('E_ratio', models.FloatField(blank=True, null=True)),
                ('R_step', models.FloatField(default=0.0)),
                ('R_im', models.FloatField(default=0.0)),
                ('R_ex', models.FloatField(default=0.0)),
                ('R_split', models.FloatField(default=0.0)),
                ('mass_variation', models.FloatField()),
                ('mass_solid', models.FloatField()),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='energy_records', to='simulations.simulationrun')),
            ],
            options={
                'db_table': 'energy_records',
                'ordering': ['run', 'step'],
                'unique_together': {('run', 'step')},
            },
        ),
    ]
