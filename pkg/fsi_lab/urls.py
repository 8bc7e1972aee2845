"""
URL configuration for fsi_lab.

Only the admin (run records) and the read-only results API are routed;
simulations themselves are driven from management commands.
"""
from django.contrib import admin
from django.urls import path, include
from django.views.generic import RedirectView

urlpatterns = [
    path('admin/', admin.site.urls),
    path('', RedirectView.as_view(url='/api/v1/runs/', permanent=False)),
    path('api/', include('api.urls')),
]
