from django.db import models


class RunRecord(models.Model):
    """One CLI run; mirrors the manifest file written next to the run's outputs."""

    command = models.CharField(max_length=32)
    argv = models.JSONField(default=list)
    config = models.JSONField(default=dict)
    seeds = models.JSONField(default=dict)
    input_digests = models.JSONField(default=dict)  # path -> sha256
    outputs = models.JSONField(default=list)
    tool_version = models.CharField(max_length=32)
    started_at = models.DateTimeField()
    finished_at = models.DateTimeField()
    manifest_path = models.CharField(max_length=1024, blank=True)

    class Meta:
        ordering = ['-started_at', '-id']

    def __str__(self):
        return f"#{self.pk} {self.command} - {self.started_at:%Y-%m-%d %H:%M:%S}"

    def as_manifest(self):
        return {
            'command': self.command,
            'argv': self.argv,
            'config': self.config,
            'seeds': self.seeds,
            'input_digests': self.input_digests,
            'outputs': self.outputs,
            'tool_version': self.tool_version,
            'started_at': self.started_at.isoformat(),
            'finished_at': self.finished_at.isoformat(),
            'manifest_path': self.manifest_path,
        }
