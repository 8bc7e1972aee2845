"""
WSGI entry point for the fsi_lab run-results API.

Serves the read-only endpoints over recorded simulation runs.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'fsi_lab.settings')

application = get_wsgi_application()
