from django.apps import AppConfig


class KmConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'km'
