from django.apps import AppConfig


class ResizeConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.resize'
