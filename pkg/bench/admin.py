from django.contrib import admin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'command', 'name', 'seed', 'status', 'output_dir', 'created_at', 'finished_at')
    list_filter = ('command', 'status', 'created_at')
    search_fields = ('name', 'output_dir', 'error')
    ordering = ('-created_at',)
    readonly_fields = ('config', 'metrics', 'created_at', 'finished_at')
