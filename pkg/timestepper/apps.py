from django.apps import AppConfig


class TimestepperConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'timestepper'
