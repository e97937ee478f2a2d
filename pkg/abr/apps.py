from django.apps import AppConfig


class AbrConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'abr'
    verbose_name = 'Adaptive behavior regularization'
