import json

from django.core.management.base import BaseCommand, CommandError

from amc.models import RunRecord


class Command(BaseCommand):
    help = 'List recorded runs, newest first, or show one run in full.'

    def add_arguments(self, parser):
        parser.add_argument('--limit', type=int, default=20)
        parser.add_argument('--command', dest='command_filter', help='Only runs of this command.')
        parser.add_argument('--show', type=int, metavar='ID', help='Print the full record of one run.')

    def handle(self, *args, **options):
        if options['show'] is not None:
            try:
                run = RunRecord.objects.get(pk=options['show'])
            except RunRecord.DoesNotExist:
                raise CommandError(f"no run with id {options['show']}", returncode=3)
            self.stdout.write(json.dumps(run.as_manifest(), indent=2, sort_keys=True))
            return

        runs = RunRecord.objects.all()
        if options['command_filter']:
            runs = runs.filter(command=options['command_filter'])
        for run in runs[:options['limit']]:
            self.stdout.write(f"{run}  {', '.join(run.outputs)}")
