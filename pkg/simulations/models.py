"""
Simulation run records
Stores the resolved configuration, status and energy time series of each run
"""

from django.db import models
from django.utils import timezone


class SimulationRun(models.Model):
    """One execution of a scenario"""
    STATUS_CHOICES = [
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    SCHEME_CHOICES = [
        ('implicit', 'Implicit'),
        ('explicit', 'Explicit'),
    ]

    PRESSURE_CHOICES = [
        ('p1', 'P1'),
        ('p1_p0', 'P1 + P0'),
    ]

    scenario = models.CharField(max_length=50)
    scheme = models.CharField(max_length=20, choices=SCHEME_CHOICES, default='implicit')
    pressure_space = models.CharField(max_length=10, choices=PRESSURE_CHOICES, default='p1')
    cells = models.CharField(max_length=30, help_text="Cells per axis, e.g. 16x16")
    dt = models.FloatField()
    n_steps = models.PositiveIntegerField()
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='running')
    failed_step = models.PositiveIntegerField(null=True, blank=True)
    error_message = models.TextField(blank=True)
    energy_violations = models.PositiveIntegerField(default=0)
    output_dir = models.CharField(max_length=500, blank=True)
    config = models.JSONField(default=dict)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        db_table = 'simulation_runs'
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.scenario} {self.cells} dt={self.dt:g} ({self.status})"

    def mark_completed(self, violations=0):
        """Record a successful finish"""
        self.status = 'completed'
        self.energy_violations = violations
        self.finished_at = timezone.now()
        self.save()

    def mark_failed(self, error, step=None):
        """Record a failure and the step it happened at"""
        self.status = 'failed'
        self.failed_step = step
        self.error_message = str(error)
        self.finished_at = timezone.now()
        self.save()

    def final_energy(self):
        """Last recorded energy row, or None"""
        return self.energy_records.order_by('-step').first()


class EnergyRecord(models.Model):
    """Energy components of one time level of a run"""
    run = models.ForeignKey(SimulationRun, on_delete=models.CASCADE,
                            related_name='energy_records')
    step = models.PositiveIntegerField()
    t = models.FloatField()
    E_k_fluid = models.FloatField()
    E_k_solid_delta = models.FloatField()
    E_d = models.FloatField()
    E_p = models.FloatField()
    E_total = models.FloatField()
    E_ratio = models.FloatField(null=True, blank=True)
    R_step = models.FloatField(default=0.0)
    R_im = models.FloatField(default=0.0)
    R_ex = models.FloatField(default=0.0)
    R_split = models.FloatField(default=0.0)
    mass_variation = models.FloatField()
    mass_solid = models.FloatField()

    class Meta:
        db_table = 'energy_records'
        ordering = ['run', 'step']
        unique_together = ['run', 'step']

    def __str__(self):
        return f"{self.run_id} step {self.step}: E_total={self.E_total:.6g}"

    @classmethod
    def from_report(cls, run, step, report):
        """Unsaved record built from an EnergyReport"""
        return cls(run=run, step=step, **report.as_dict())
