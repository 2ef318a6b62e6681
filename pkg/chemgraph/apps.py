from django.apps import AppConfig


class ChemgraphConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'chemgraph'
    verbose_name = 'Molecular graphs'
