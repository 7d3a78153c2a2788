from django.test import SimpleTestCase

from solvgeom.exceptions import ConfigInvalid
from solvgeom.serializers import CampaignConfigSerializer
from solvgeom.tasks import load_config


class CampaignConfigSerializerTests(SimpleTestCase):

    def test_defaults_fill_missing_sections(self):
        serializer = CampaignConfigSerializer(data={'spectrum': [{'dim': 1, 'alpha': 1.0}, {'dim': 1, 'alpha': 2.0}]})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        data = serializer.validated_data
        self.assertEqual(data['seed'], 0)
        self.assertEqual(data['counts']['pairs'], 10000)
        self.assertEqual(data['counts']['relation1_points'], 50)
        self.assertEqual(data['counts']['visual_points'], 24)
        self.assertEqual(data['modulus']['resolutions'], [64, 128, 256])
        self.assertEqual(len(data['spectra']), 1)
        self.assertEqual(data['spectra'][0].n, 2)
        self.assertEqual(data['spectra_blocks'], [[{'dim': 1, 'alpha': 1.0}, {'dim': 1, 'alpha': 2.0}]])

    def test_spectra_list(self):
        config = load_config({
            'spectra': [[{'dim': 2, 'alpha': 1.0}], [{'dim': 1, 'alpha': 1.0}, {'dim': 2, 'alpha': 3.0}]],
            'seed': 5,
        })
        self.assertEqual([spec.n for spec in config['spectra']], [2, 3])
        self.assertEqual(config['seed'], 5)

    def test_rejects_bad_spectrum(self):
        for blocks in ([{'dim': 1, 'alpha': 2.0}, {'dim': 1, 'alpha': 1.0}],
                       [{'dim': 1, 'alpha': -1.0}],
                       [{'dim': 0, 'alpha': 1.0}]):
            serializer = CampaignConfigSerializer(data={'spectrum': blocks})
            self.assertFalse(serializer.is_valid())
            self.assertIn('spectrum', serializer.errors)

    def test_needs_exactly_one_spectrum_source(self):
        with self.assertRaises(ConfigInvalid):
            load_config({'seed': 1})
        with self.assertRaises(ConfigInvalid) as ctx:
            load_config({'spectrum': [{'dim': 1, 'alpha': 1.0}], 'spectra': [[{'dim': 1, 'alpha': 1.0}]]})
        self.assertIn('spectrum', ctx.exception.errors)

    def test_rejects_non_positive_settings(self):
        spectrum = [{'dim': 1, 'alpha': 1.0}]
        cases = [
            {'counts': {'pairs': 0}},
            {'tolerances': {'root': 0.0}},
            {'epsilon': {'epsilon': -0.1}},
            {'epsilon': {'epsilon': 0.5, 'epsilon0': 0.2}},
            {'modulus': {'Q': 1.0}},
            {'modulus': {'radius': 0.0}},
            {'modulus': {'resolutions': [8, 16]}},
        ]
        for extra in cases:
            serializer = CampaignConfigSerializer(data={'spectrum': spectrum, **extra})
            self.assertFalse(serializer.is_valid(), extra)
            self.assertIn(next(iter(extra)), serializer.errors)
