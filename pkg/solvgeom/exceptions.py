# solvgeom/exceptions.py

"""
Error hierarchy of the solvgeom app.

Every error carries a ``default_code`` and a ``default_detail`` the same way
rest_framework's APIException does, so serializers, commands and reports can
render them uniformly.
"""


class GeometryError(Exception):
    """Base class for every failure raised by the geometry services."""

    default_code = 'geometry_error'
    default_detail = 'A geometry computation failed.'

    def __init__(self, detail=None, code=None):
        self.detail = detail if detail is not None else self.default_detail
        self.code = code if code is not None else self.default_code
        super().__init__(self.detail)

    def as_dict(self):
        return {'code': self.code, 'detail': str(self.detail)}


# =============================================================================
# SPECTRUM / INPUT VALIDATION
# =============================================================================

class EmptySpectrum(GeometryError):
    default_code = 'empty_spectrum'
    default_detail = 'A spectrum needs at least one block.'


class NonIncreasingEigenvalues(GeometryError):
    default_code = 'non_increasing_eigenvalues'
    default_detail = 'Block eigenvalues must be strictly increasing.'


class NonPositiveEigenvalue(GeometryError):
    default_code = 'non_positive_eigenvalue'
    default_detail = 'Block eigenvalues must be strictly positive.'


class ZeroDimensionBlock(GeometryError):
    default_code = 'zero_dimension_block'
    default_detail = 'Every block needs dimension at least 1.'


class DimensionMismatch(GeometryError):
    default_code = 'dimension_mismatch'
    default_detail = 'Vector length does not match the spectrum dimension.'


class IdenticalPoints(GeometryError):
    default_code = 'identical_points'
    default_detail = 'The operation needs two distinct points.'


class SingleBlockSpectrum(GeometryError):
    default_code = 'single_block_spectrum'
    default_detail = 'The operation needs a spectrum with at least two blocks.'


class MultiBlockSpectrum(GeometryError):
    default_code = 'multi_block_spectrum'
    default_detail = 'The closed-form oracle only covers single-block spectra.'


class TooManyBlocks(GeometryError):
    default_code = 'too_many_blocks'
    default_detail = 'The spectrum has more blocks than the operation supports.'


class NonPositiveRadius(GeometryError):
    default_code = 'non_positive_radius'
    default_detail = 'Radius must be strictly positive.'


class TooFewVertices(GeometryError):
    default_code = 'too_few_vertices'
    default_detail = 'A polyline needs at least two vertices.'


# =============================================================================
# GROUP GEOMETRY
# =============================================================================

class InvalidVelocity(GeometryError):
    default_code = 'invalid_velocity'
    default_detail = 'Initial velocity must have unit Riemannian norm.'


class StepSizeUnderflow(GeometryError):
    default_code = 'step_size_underflow'
    default_detail = 'The geodesic integrator could not advance.'


class NoConvergence(GeometryError):
    """Distance solve failed; ``upper_bound`` is the best length found."""

    default_code = 'no_convergence'
    default_detail = 'The distance solver did not converge.'

    def __init__(self, detail=None, code=None, upper_bound=None):
        super().__init__(detail, code)
        self.upper_bound = upper_bound

    def as_dict(self):
        data = super().as_dict()
        data['upper_bound'] = self.upper_bound
        return data


# =============================================================================
# BOUNDARY CONSTRUCTIONS
# =============================================================================

class BasepointDegenerate(GeometryError):
    default_code = 'basepoint_degenerate'
    default_detail = 'A sample point sits at distance zero from the basepoint.'


class DegenerateQuadruple(GeometryError):
    default_code = 'degenerate_quadruple'
    default_detail = 'Cross-ratio is undefined for this quadruple.'


# =============================================================================
# MAP ANALYSIS
# =============================================================================

class TooFewPoints(GeometryError):
    default_code = 'too_few_points'
    default_detail = 'Not enough distinct sample points.'


class SparseNeighborhood(GeometryError):
    default_code = 'sparse_neighborhood'
    default_detail = 'Too few sample points near the evaluation point.'


class FoliationBroken(GeometryError):
    default_code = 'foliation_broken'
    default_detail = 'The map does not preserve the horizontal foliation.'


class NotQuasisymmetric(GeometryError):
    default_code = 'not_quasisymmetric'
    default_detail = 'Measured distortion diverges across scales.'


class InconsistentPair(GeometryError):
    default_code = 'inconsistent_pair'
    default_detail = 'Boundary map is not the trace of the group map.'


# =============================================================================
# MODULUS
# =============================================================================

class NotSameLeaf(GeometryError):
    default_code = 'not_same_leaf'
    default_detail = 'Endpoints must lie on a common horizontal leaf.'


class EmptyFamily(GeometryError):
    default_code = 'empty_family'
    default_detail = 'No curve of the family crosses the grid.'


class UnboundedBox(GeometryError):
    default_code = 'unbounded_box'
    default_detail = 'The grid box must be finite and non-degenerate.'


# =============================================================================
# CAMPAIGNS
# =============================================================================

class ConfigInvalid(GeometryError):
    """Carries the serializer ``errors`` dict as ``errors``."""

    default_code = 'config_invalid'
    default_detail = 'Campaign configuration is invalid.'

    def __init__(self, detail=None, code=None, errors=None):
        super().__init__(detail, code)
        self.errors = errors or {}


class CampaignFailed(GeometryError):
    """Carries the names of failing checks as ``failures``."""

    default_code = 'campaign_failed'
    default_detail = 'One or more campaign checks failed.'

    def __init__(self, detail=None, code=None, failures=None):
        super().__init__(detail, code)
        self.failures = list(failures or [])


class ConfigHashMismatch(GeometryError):
    default_code = 'config_hash_mismatch'
    default_detail = 'Report shards come from different configurations.'
