# solvgeom/utils/profiles.py
# Binning of (input ratio, output ratio) samples into DistortionProfiles.

import numpy as np
from django.conf import settings

from ..models import DistortionProfile


def profile_edges(bins=None, ratio_range=None):
    """Log-spaced bin edges over the configured ratio range."""
    conf = settings.SOLVGEOM
    bins = conf['PROFILE_BINS'] if bins is None else bins
    low, high = conf['PROFILE_RANGE'] if ratio_range is None else ratio_range
    return np.logspace(np.log10(low), np.log10(high), bins + 1)


def accumulate_profile(t, out, edges=None, degenerate=0):
    """
    Fold ratio samples into a fresh DistortionProfile.

    Input ratios outside the edge range are clamped into the end bins and
    counted. Samples must already exclude zero denominators.
    """
    edges = profile_edges() if edges is None else np.asarray(edges, dtype=float)
    profile = DistortionProfile.empty(edges)
    profile.degenerate = int(degenerate)
    t = np.asarray(t, dtype=float).ravel()
    out = np.asarray(out, dtype=float).ravel()
    if t.size == 0:
        return profile

    profile.clamped_low = int(np.sum(t <= edges[0]))
    profile.clamped_high = int(np.sum(t > edges[-1]))
    idx = np.clip(np.searchsorted(edges, t, side='left') - 1, 0, len(edges) - 2)

    bin_max = np.full(len(edges) - 1, -np.inf)
    np.maximum.at(bin_max, idx, out)
    profile.bin_max = np.where(np.isneginf(bin_max), np.nan, bin_max)
    profile.counts = np.bincount(idx, minlength=len(edges) - 1)

    worst = int(np.argmax(out / t))
    profile.witness = (float(t[worst]), float(out[worst]))
    return profile


def pair_ratios(domain_dist, image_dist):
    """Ratios image/domain over pairs with a nonzero domain distance."""
    domain_dist = np.asarray(domain_dist, dtype=float)
    image_dist = np.asarray(image_dist, dtype=float)
    valid = domain_dist > 0
    return image_dist[valid] / domain_dist[valid]
