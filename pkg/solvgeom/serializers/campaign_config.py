from rest_framework import serializers

from solvgeom.exceptions import GeometryError
from solvgeom.services.spectrum_metrics import build_spectrum

SECTIONS = ('counts', 'tolerances', 'epsilon', 'distance', 'maps', 'modulus')

SUBCOMMANDS = [
    'verify-norms', 'distance', 'geodesic', 'busemann', 'quasicenter', 'g3',
    'visual', 'parabolic', 'invert', 'sphericalize', 'relation1', 'qs-profile',
    'foliation', 'factorize', 'main-bound', 'height-respect', 'modulus', 'all',
]


class BlockSerializer(serializers.Serializer):
    """One ``(dim, alpha)`` block of a spectrum."""

    dim = serializers.IntegerField(min_value=1)
    alpha = serializers.FloatField()


class CountsSerializer(serializers.Serializer):
    """
    Sample sizes of the campaigns. Every count must be at least 1.
    """

    pairs = serializers.IntegerField(min_value=1, default=10000)
    distance_pairs = serializers.IntegerField(min_value=1, default=200)
    geodesics = serializers.IntegerField(min_value=1, default=20)
    busemann_points = serializers.IntegerField(min_value=1, default=100)
    quasicenter_pairs = serializers.IntegerField(min_value=1, default=100)
    g3_pairs = serializers.IntegerField(min_value=1, default=100)
    points = serializers.IntegerField(min_value=4, default=200)
    visual_points = serializers.IntegerField(min_value=4, default=24)
    relation1_points = serializers.IntegerField(min_value=4, default=50)
    triples = serializers.IntegerField(min_value=1, default=20000)
    quadruples = serializers.IntegerField(min_value=1, default=10000)
    group_pairs = serializers.IntegerField(min_value=1, default=20)


class TolerancesSerializer(serializers.Serializer):
    root = serializers.FloatField(required=False)
    distance = serializers.FloatField(required=False)
    profile_slack = serializers.FloatField(required=False)

    def validate(self, attrs):
        bad = {key: 'Tolerance must be strictly positive.' for key, value in attrs.items() if not value > 0}
        if bad:
            raise serializers.ValidationError(bad)
        return attrs


class EpsilonSerializer(serializers.Serializer):
    """Visual parameter and the unfixed thresholds; null means derive from the spectrum."""

    epsilon = serializers.FloatField(required=False, allow_null=True, default=None)
    epsilon0 = serializers.FloatField(required=False, allow_null=True, default=None)
    epsilon1 = serializers.FloatField(required=False, allow_null=True, default=None)
    c = serializers.FloatField(required=False, default=1.0)

    def validate(self, attrs):
        for key in ('epsilon', 'epsilon0', 'epsilon1'):
            if attrs.get(key) is not None and not attrs[key] > 0:
                raise serializers.ValidationError({key: 'Must be strictly positive.'})
        epsilon, epsilon0 = attrs.get('epsilon'), attrs.get('epsilon0')
        if epsilon is not None and epsilon0 is not None and epsilon > epsilon0:
            raise serializers.ValidationError({'epsilon': f'Exceeds epsilon0 = {epsilon0}.'})
        return attrs


class DistanceSerializer(serializers.Serializer):
    oracle = serializers.BooleanField(default=False)
    oracle_alphas = serializers.ListField(child=serializers.FloatField(), default=[0.5, 1.0, 2.0])
    oracle_dimension = serializers.IntegerField(min_value=1, default=1)
    box = serializers.FloatField(default=1.0)
    heights = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                    default=[-2.0, 2.0])


class MapsSerializer(serializers.Serializer):
    scales = serializers.ListField(child=serializers.FloatField(), min_length=1,
                                   default=[1e-1, 1e-2, 1e-3, 1e-4])
    per_axis = serializers.IntegerField(min_value=2, default=8)
    similarity = serializers.FloatField(default=3.0)
    shear_L = serializers.ListField(child=serializers.FloatField(), default=[0.5, 1.0, 2.0])
    rotation = serializers.FloatField(default=1.5707963267948966)
    leaves = serializers.IntegerField(min_value=1, default=8)
    per_leaf = serializers.IntegerField(min_value=2, default=6)
    group_box = serializers.FloatField(default=1.0)


class ModulusSerializer(serializers.Serializer):
    resolutions = serializers.ListField(child=serializers.IntegerField(min_value=2), min_length=3,
                                        default=[64, 128, 256])
    Q = serializers.FloatField(required=False, allow_null=True, default=None)
    radius = serializers.FloatField(default=0.25)
    diagonal_count = serializers.IntegerField(min_value=1, default=64)

    def validate_Q(self, value):
        if value is not None and not value > 1:
            raise serializers.ValidationError('Q must exceed 1.')
        return value

    def validate_radius(self, value):
        if not value > 0:
            raise serializers.ValidationError('Radius must be strictly positive.')
        return value


def _validated_spectrum(blocks):
    try:
        return build_spectrum(blocks)
    except GeometryError as exc:
        raise serializers.ValidationError(f'{exc.code}: {exc.detail}')


class CampaignConfigSerializer(serializers.Serializer):
    """
    Validates a campaign config document.

    ``spectrum`` (one list of blocks) is shorthand for a one-element
    ``spectra``. Validated data carries ``spectra`` as built Spectrum objects
    next to their block dicts under ``spectra_blocks``.
    """

    spectrum = BlockSerializer(many=True, required=False)
    spectra = serializers.ListField(child=BlockSerializer(many=True), required=False, min_length=1)
    seed = serializers.IntegerField(min_value=0, default=0)
    counts = CountsSerializer(required=False)
    tolerances = TolerancesSerializer(required=False)
    epsilon = EpsilonSerializer(required=False)
    distance = DistanceSerializer(required=False)
    maps = MapsSerializer(required=False)
    modulus = ModulusSerializer(required=False)
    output_dir = serializers.CharField(required=False, allow_blank=False)

    def to_internal_value(self, data):
        # Missing sections still go through their serializers so defaults apply
        if isinstance(data, dict):
            data = {**{name: {} for name in SECTIONS}, **data}
        return super().to_internal_value(data)

    def validate_spectrum(self, value):
        _validated_spectrum(value)
        return value

    def validate_spectra(self, value):
        for blocks in value:
            _validated_spectrum(blocks)
        return value

    def validate(self, attrs):
        single, many = attrs.pop('spectrum', None), attrs.pop('spectra', None)
        if single is None and many is None:
            raise serializers.ValidationError({'spectrum': 'Provide spectrum or spectra.'})
        if single is not None and many is not None:
            raise serializers.ValidationError({'spectrum': 'Provide spectrum or spectra, not both.'})
        blocks = [single] if single is not None else many
        attrs['spectra_blocks'] = [[dict(block) for block in spectrum] for spectrum in blocks]
        attrs['spectra'] = [_validated_spectrum(spectrum) for spectrum in blocks]
        return attrs
