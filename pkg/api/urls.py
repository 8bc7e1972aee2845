"""
API URLs for recorded simulation runs
"""

from django.urls import path, include
from rest_framework.routers import DefaultRouter

from .views import SimulationRunViewSet

app_name = 'api'

router = DefaultRouter()
router.register('runs', SimulationRunViewSet, basename='run')

urlpatterns = [
    path('v1/', include(router.urls)),
]
