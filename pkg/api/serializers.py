"""
Serializers for recorded runs and their energy time series
"""

from rest_framework import serializers

from simulations.models import EnergyRecord, SimulationRun


class EnergyRecordSerializer(serializers.ModelSerializer):
    class Meta:
        model = EnergyRecord
        fields = [
            'step', 't', 'E_k_fluid', 'E_k_solid_delta', 'E_d', 'E_p', 'E_total',
            'E_ratio', 'R_step', 'R_im', 'R_ex', 'R_split', 'mass_variation', 'mass_solid',
        ]


class SimulationRunSerializer(serializers.ModelSerializer):
    n_records = serializers.IntegerField(source='energy_records.count', read_only=True)
    final_E_ratio = serializers.SerializerMethodField()

    class Meta:
        model = SimulationRun
        fields = [
            'id', 'scenario', 'scheme', 'pressure_space', 'cells', 'dt', 'n_steps',
            'status', 'failed_step', 'error_message', 'energy_violations',
            'output_dir', 'created_at', 'finished_at', 'n_records', 'final_E_ratio',
        ]

    def get_final_E_ratio(self, obj):
        record = obj.final_energy()
        return record.E_ratio if record else None


class SimulationRunDetailSerializer(SimulationRunSerializer):
    class Meta(SimulationRunSerializer.Meta):
        fields = SimulationRunSerializer.Meta.fields + ['config']
