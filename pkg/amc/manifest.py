"""Run manifests: what was run, with which inputs, producing which outputs."""
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional

from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone

from .models import RunRecord

logger = logging.getLogger(__name__)


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for block in iter(lambda: handle.read(1 << 20), b''):
            digest.update(block)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    argv: list
    config: dict
    seeds: dict = field(default_factory=dict)
    input_digests: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    tool_version: str = field(default_factory=lambda: settings.AMC_TOOL_VERSION)
    started_at: datetime = field(default_factory=timezone.now)
    finished_at: Optional[datetime] = None

    @classmethod
    def start(cls, command, argv, config, inputs=()):
        digests = {str(path): sha256_file(path) for path in inputs if path and Path(path).is_file()}
        return cls(command=command, argv=list(argv), config=config, input_digests=digests)

    def finish(self, outputs, seeds=None):
        self.outputs = [str(path) for path in outputs]
        self.seeds = dict(seeds or {})
        self.finished_at = timezone.now()
        return self

    def to_dict(self):
        data = asdict(self)
        data['started_at'] = self.started_at.isoformat()
        data['finished_at'] = self.finished_at.isoformat() if self.finished_at else None
        return data

    def write(self, path):
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str) + '\n', encoding='utf-8')
        return path

    def record(self, manifest_path=''):
        """Store the manifest in the run registry; skipped with a warning if the database is unavailable."""
        try:
            return RunRecord.objects.create(
                command=self.command,
                argv=self.argv,
                config=json.loads(json.dumps(self.config, default=str)),
                seeds=self.seeds,
                input_digests=self.input_digests,
                outputs=self.outputs,
                tool_version=self.tool_version,
                started_at=self.started_at,
                finished_at=self.finished_at or timezone.now(),
                manifest_path=str(manifest_path),
            )
        except DatabaseError as exc:
            logger.warning("Run not recorded in the registry (%s); run 'manage.py migrate' to enable it", exc)
            return None
