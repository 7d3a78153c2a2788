import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from solvgeom.exceptions import GeometryError
from solvgeom.services.campaign_service import CampaignService

CONFIG = {
    'spectrum': [{'dim': 1, 'alpha': 1.0}, {'dim': 1, 'alpha': 2.0}],
    'seed': 3,
    'counts': {'pairs': 60},
}


class CampaignCommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        self.config_path = self.root / 'config.json'
        self.config_path.write_text(json.dumps(CONFIG))

    def campaign(self, *args, **options):
        out = StringIO()
        call_command('campaign', *args, config=str(self.config_path), stdout=out, **options)
        return out.getvalue()

    def test_verify_norms_passes(self):
        output = self.campaign('verify-norms', out=str(self.root / 'one'))
        self.assertIn('Campaign verify-norms passed', output)
        lines = (self.root / 'one' / 'verify-norms.jsonl').read_text().splitlines()
        header = json.loads(lines[0])
        self.assertTrue(header['passed'])
        self.assertEqual(header['seed'], 3)
        self.assertNotIn('shards', header)
        self.assertGreater(len(lines), 1)
        self.assertTrue((self.root / 'one' / 'verify-norms.txt').exists())

    def test_output_does_not_depend_on_jobs(self):
        self.campaign('verify-norms', out=str(self.root / 'one'))
        self.campaign('verify-norms', out=str(self.root / 'two'), jobs=2)
        self.assertEqual((self.root / 'one' / 'verify-norms.jsonl').read_text(),
                         (self.root / 'two' / 'verify-norms.jsonl').read_text())

    def test_shards_merge_to_the_single_run(self):
        self.campaign('verify-norms', out=str(self.root / 'one'))
        for shard in (0, 1):
            self.campaign('verify-norms', out=str(self.root / 'shards'), jobs=2, shard=shard)
        shard_files = sorted(str(path) for path in (self.root / 'shards').glob('*.jsonl'))
        self.assertEqual(len(shard_files), 2)

        out = StringIO()
        call_command('merge_reports', *shard_files, out=str(self.root / 'merged'), stem='merged', stdout=out)
        self.assertIn('Merged report passed', out.getvalue())
        merged = (self.root / 'merged' / 'merged.jsonl').read_text().splitlines()
        single = (self.root / 'one' / 'verify-norms.jsonl').read_text().splitlines()
        shards = json.loads(merged[0])['shards']
        self.assertEqual([label.split('@')[0] for label in shards], ['0/2', '1/2'])
        self.assertTrue(all(label.split('@')[1].startswith('3:') for label in shards))
        self.assertEqual(merged[1:], single[1:])

    def test_seed_override_changes_only_the_seed(self):
        self.campaign('verify-norms', out=str(self.root / 'a'))
        self.campaign('verify-norms', out=str(self.root / 'b'), seed=4)
        a = json.loads((self.root / 'a' / 'verify-norms.jsonl').read_text().splitlines()[0])
        b = json.loads((self.root / 'b' / 'verify-norms.jsonl').read_text().splitlines()[0])
        self.assertEqual(a['config_hash'], b['config_hash'])
        self.assertEqual(b['seed'], 4)

    def test_invalid_config(self):
        self.config_path.write_text(json.dumps({'spectrum': [{'dim': 1, 'alpha': -1.0}]}))
        with self.assertRaises(CommandError) as ctx:
            self.campaign('verify-norms', out=str(self.root / 'bad'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_config(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('campaign', 'verify-norms', config=str(self.root / 'missing.json'), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_shard_out_of_range(self):
        with self.assertRaises(CommandError) as ctx:
            self.campaign('verify-norms', out=str(self.root / 'x'), jobs=2, shard=2)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_failing_check_sets_return_code(self):
        with mock.patch.object(CampaignService, '_verify_norms', side_effect=GeometryError('boom')):
            with self.assertRaises(CommandError) as ctx:
                self.campaign('verify-norms', out=str(self.root / 'fail'))
        self.assertEqual(ctx.exception.returncode, 1)
        header = json.loads((self.root / 'fail' / 'verify-norms.jsonl').read_text().splitlines()[0])
        self.assertFalse(header['passed'])


class MergeReportsCommandTests(SimpleTestCase):

    def test_missing_report(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('merge_reports', '/nonexistent/report.jsonl', out='/tmp', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
