from django.apps import AppConfig


class WolffConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'wolff'
