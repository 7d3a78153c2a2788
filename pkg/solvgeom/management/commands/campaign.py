import json
import logging
from pathlib import Path

from celery import group
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from solvgeom.exceptions import CampaignFailed, ConfigInvalid
from solvgeom.serializers.campaign_config import SUBCOMMANDS
from solvgeom.services import report_service
from solvgeom.tasks import load_config, run_campaign_shard

logger = logging.getLogger('solvgeom')


class Command(BaseCommand):
    help = 'Run a verification campaign and write its JSON-lines report and text summary'

    def add_arguments(self, parser):
        parser.add_argument('subcommand', choices=SUBCOMMANDS)
        parser.add_argument('--config', default=None, help='Campaign config JSON (default: settings.CAMPAIGN_CONFIG)')
        parser.add_argument('--seed', type=int, default=None, help='Override the config seed')
        parser.add_argument('--out', default=None, help='Report directory (default: config output_dir or REPORTS_DIR)')
        parser.add_argument('--jobs', type=int, default=1, help='Number of shards')
        parser.add_argument('--shard', type=int, default=None,
                            help='Run only this shard of --jobs and write a shard report for merge_reports')
        parser.add_argument('--oracle', action='store_true',
                            help='Add the closed-form single-block distance oracle to the distance campaign')

    def handle(self, *args, **options):
        try:
            raw_config = self._raw_config(options)
            config = load_config(raw_config)
        except ConfigInvalid as exc:
            raise CommandError(f'{exc.detail}: {json.dumps(exc.errors, default=str)}', returncode=2)

        jobs = options['jobs']
        if jobs < 1:
            raise CommandError('--jobs must be at least 1', returncode=2)
        shard = options['shard']
        if shard is not None and not 0 <= shard < jobs:
            raise CommandError(f'--shard must lie in [0, {jobs})', returncode=2)

        subcommand = options['subcommand']
        out_dir = Path(options['out'] or config.get('output_dir') or settings.REPORTS_DIR)

        if shard is not None:
            report = report_service.report_from_dict(run_campaign_shard(subcommand, raw_config, shard, jobs))
            jsonl, summary = report_service.write_report(
                report, out_dir, include_shards=True, stem=f'{subcommand}.shard-{shard}-of-{jobs}')
        else:
            # Eager by default; with a broker configured the shards run on workers
            shards = group(run_campaign_shard.s(subcommand, raw_config, k, jobs) for k in range(jobs))
            results = shards.apply_async().get()
            report = report_service.merge_reports(report_service.report_from_dict(data) for data in results)
            jsonl, summary = report_service.write_report(report, out_dir, include_shards=False)

        self.stdout.write(report_service.summary_text(report))
        self.stdout.write(f'Report: {jsonl}')
        self.stdout.write(f'Summary: {summary}')

        try:
            self._raise_for_failures(report)
        except CampaignFailed as exc:
            raise CommandError(f'{exc.detail}: {", ".join(exc.failures)}', returncode=1)
        self.stdout.write(self.style.SUCCESS(f'Campaign {subcommand} passed'))

    def _raw_config(self, options):
        """Config file contents with the command-line overrides applied."""
        path = Path(options['config'] or settings.CAMPAIGN_CONFIG)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigInvalid(f'config file {path} not found', errors={'config': ['File not found.']})
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f'config file {path} is not valid JSON', errors={'config': [str(exc)]})
        if not isinstance(raw, dict):
            raise ConfigInvalid(f'config file {path} must hold a JSON object', errors={'config': ['Not an object.']})

        if options['seed'] is not None:
            raw['seed'] = options['seed']
        if options['out']:
            raw['output_dir'] = options['out']
        if options['oracle']:
            raw['distance'] = {**raw.get('distance', {}), 'oracle': True}
        return raw

    def _raise_for_failures(self, report):
        if not report.passed:
            logger.error(f'Campaign {report.subcommand} failed: {report.failing}')
            raise CampaignFailed(f'{len(report.failing)} checks failed', failures=report.failing)
