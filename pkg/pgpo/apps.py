from django.apps import AppConfig


class PgpoConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'pgpo'
    verbose_name = 'Preference-guided policy optimization'
