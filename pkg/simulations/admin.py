"""
Admin configuration for simulation records
"""

from django.contrib import admin
from .models import SimulationRun, EnergyRecord


class EnergyRecordInline(admin.TabularInline):
    model = EnergyRecord
    extra = 0
    fields = ['step', 't', 'E_total', 'E_ratio', 'R_step', 'mass_variation']
    readonly_fields = fields
    can_delete = False


@admin.register(SimulationRun)
class SimulationRunAdmin(admin.ModelAdmin):
    list_display = ['scenario', 'scheme', 'pressure_space', 'cells', 'dt', 'n_steps',
                    'status', 'energy_violations', 'created_at']
    list_filter = ['scenario', 'scheme', 'pressure_space', 'status']
    search_fields = ['scenario', 'error_message']
    readonly_fields = ['config', 'created_at', 'finished_at']
    ordering = ['-created_at']
    inlines = [EnergyRecordInline]


@admin.register(EnergyRecord)
class EnergyRecordAdmin(admin.ModelAdmin):
    list_display = ['run', 'step', 't', 'E_total', 'E_ratio', 'R_step', 'mass_variation']
    list_filter = ['run__scenario']
    ordering = ['run', 'step']

    def get_queryset(self, request):
        return super().get_queryset(request).select_related('run')
