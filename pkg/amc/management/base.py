import logging
import sys
from pathlib import Path
from typing import NamedTuple, Optional

from django.core.management.base import BaseCommand, CommandError

from amc.config import Option, add_options, join_dash_values, positive_int, resolve_options
from amc.exceptions import InvalidArgumentError, InvariantViolation, RadioError
from amc.manifest import RunManifest

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

logger = logging.getLogger(__name__)

COMMON_OPTIONS = {
    'threads': Option(positive_int, default=1, help='Worker threads; results do not depend on it.'),
}


class RunOutcome(NamedTuple):
    outputs: list
    manifest_path: Path
    seeds: Optional[dict] = None


class RadioCommand(BaseCommand):
    """Base for radiolab commands: option resolution, exit codes and run manifests.

    Subclasses declare ``options`` and ``input_options`` (options naming
    files whose digests go into the manifest) and implement ``run``.
    """

    options = {}
    input_options = ()

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parse_args = parser.parse_args
        value_options = {'config': Option(), **COMMON_OPTIONS, **self.options}

        def parse_joined(args=None, namespace=None):
            if args is not None:
                args = join_dash_values(args, value_options)
            return parse_args(args, namespace)

        parser.parse_args = parse_joined
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Flat key=value file; explicit flags take precedence.')
        add_options(parser, {**COMMON_OPTIONS, **self.options})

    def run(self, opts):
        raise NotImplementedError

    def configure_logging(self, verbosity):
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
        logging.getLogger('amc').setLevel(level)

    def handle(self, *args, **options):
        self.configure_logging(options.get('verbosity', 1))
        try:
            opts = resolve_options({**COMMON_OPTIONS, **self.options}, options, options.get('config'))
            inputs = [opts.get(name) for name in self.input_options] + [options.get('config')]
            argv = sys.argv if getattr(self, '_called_from_command_line', False) else [self.command_name]
            manifest = RunManifest.start(self.command_name, argv, opts, inputs)
            outcome = self.run(opts)
            manifest.finish(outcome.outputs, outcome.seeds)
            manifest.write(outcome.manifest_path)
        except CommandError:
            raise
        except InvalidArgumentError as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE) from exc
        except InvariantViolation as exc:
            raise CommandError(str(exc), returncode=EXIT_INTERNAL) from exc
        except (RadioError, OSError) as exc:
            raise CommandError(str(exc), returncode=EXIT_DATA) from exc
        except Exception as exc:
            logger.exception("%s failed unexpectedly", self.command_name)
            raise CommandError(f"internal error: {exc}", returncode=EXIT_INTERNAL) from exc

        manifest.record(outcome.manifest_path)

    @property
    def command_name(self):
        return self.__class__.__module__.rsplit('.', 1)[-1]


def manifest_for(path):
    path = Path(path)
    return path / 'manifest.json' if path.is_dir() else path.with_name(path.name + '.manifest.json')
