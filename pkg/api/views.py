"""
Read-only API views for simulation runs
"""

from rest_framework import viewsets
from rest_framework.decorators import action
from rest_framework.response import Response

from simulations.models import SimulationRun
from .serializers import (
    EnergyRecordSerializer, SimulationRunDetailSerializer, SimulationRunSerializer,
)


class SimulationRunViewSet(viewsets.ReadOnlyModelViewSet):
    """List and inspect recorded runs; filter with ?scenario=, ?status=, ?scheme="""
    queryset = SimulationRun.objects.all()

    def get_serializer_class(self):
        if self.action == 'retrieve':
            return SimulationRunDetailSerializer
        return SimulationRunSerializer

    def get_queryset(self):
        queryset = super().get_queryset()
        for field in ('scenario', 'status', 'scheme', 'pressure_space'):
            value = self.request.query_params.get(field)
            if value:
                queryset = queryset.filter(**{field: value})
        return queryset

    @action(detail=True, methods=['get'])
    def energy(self, request, pk=None):
        """Energy time series of one run, ordered by step"""
        records = self.get_object().energy_records.order_by('step')
        page = self.paginate_queryset(records)
        if page is not None:
            return self.get_paginated_response(EnergyRecordSerializer(page, many=True).data)
        return Response(EnergyRecordSerializer(records, many=True).data)
