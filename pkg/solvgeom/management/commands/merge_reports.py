from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from solvgeom.exceptions import ConfigHashMismatch, ConfigInvalid
from solvgeom.services import report_service


class Command(BaseCommand):
    help = 'Merge shard reports of one campaign into a single report'

    def add_arguments(self, parser):
        parser.add_argument('reports', nargs='+', help='Shard report .jsonl files')
        parser.add_argument('--out', required=True, help='Directory for the merged report')
        parser.add_argument('--stem', default=None, help='File stem of the merged report (default: subcommand)')

    def handle(self, *args, **options):
        try:
            reports = [report_service.read_report(path) for path in options['reports']]
            merged = report_service.merge_reports(reports)
        except FileNotFoundError as exc:
            raise CommandError(f'report not found: {exc.filename}', returncode=2)
        except (ConfigInvalid, ConfigHashMismatch) as exc:
            raise CommandError(str(exc.detail), returncode=2)

        jsonl, summary = report_service.write_report(merged, Path(options['out']), include_shards=True,
                                                     stem=options['stem'])
        self.stdout.write(report_service.summary_text(merged))
        self.stdout.write(f'Merged {len(reports)} reports into {jsonl}')
        if not merged.passed:
            raise CommandError(f'{len(merged.failing)} checks failed: {", ".join(merged.failing)}', returncode=1)
        self.stdout.write(self.style.SUCCESS('Merged report passed'))
