# =============================================================================
# MODELS PACKAGE
# =============================================================================
# Domain types of the solvgeom app. Nothing here is persisted: every type is a
# plain dataclass around numpy arrays, built by the services.
# =============================================================================

from .spectrum import Spectrum
from .points import BoundaryPoint, GeodesicPath, GroupPoint
from .sampled_space import SampledSpace, VisualParams
from .sampled_map import DistortionProfile, SampledGroupMap, SampledMap
from .curve_family import CurveFamily, GridDensity
from .reports import CampaignReport, CheckStat

__all__ = [
    'Spectrum',
    'GroupPoint',
    'BoundaryPoint',
    'GeodesicPath',
    'SampledSpace',
    'VisualParams',
    'SampledMap',
    'SampledGroupMap',
    'DistortionProfile',
    'CurveFamily',
    'GridDensity',
    'CheckStat',
    'CampaignReport',
]
