from django.apps import AppConfig


class EvolveConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'evolve'
    verbose_name = 'Evolutionary inference'
