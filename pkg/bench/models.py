from django.db import models
from django.utils import timezone


class ExperimentRun(models.Model):
    STATUS_CHOICES = [
        ('running', 'Running'),
        ('finished', 'Finished'),
        ('failed', 'Failed'),
    ]

    command = models.CharField(max_length=32)
    name = models.CharField(max_length=255, blank=True)
    seed = models.IntegerField(default=0)
    config = models.JSONField(default=dict, blank=True)
    status = models.CharField(max_length=10, choices=STATUS_CHOICES, default='running')
    output_dir = models.CharField(max_length=1024, blank=True)
    metrics = models.JSONField(null=True, blank=True)
    error = models.TextField(blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.command} {self.name} (seed {self.seed}) - {self.status}"

    def mark_finished(self, metrics=None):
        self.status = 'finished'
        self.metrics = metrics
        self.finished_at = timezone.now()
        self.save(update_fields=['status', 'metrics', 'finished_at'])

    def mark_failed(self, error):
        self.status = 'failed'
        self.error = str(error)
        self.finished_at = timezone.now()
        self.save(update_fields=['status', 'error', 'finished_at'])
