from django.apps import AppConfig


class MeshingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'meshing'
