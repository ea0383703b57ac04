"""Unit-variance truncated normals on either half-line."""
import numpy as np
from scipy.special import erfcx, log_ndtr, ndtri_exp

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
_SQRT2 = np.sqrt(2.0)


def mills_ratio_pos(x):
    """phi(x) / Phi(x), stable for all finite x."""
    # Phi(x) = erfcx(-x/sqrt2) * exp(-x^2/2) / 2, so the Gaussian factors cancel
    return _SQRT_2_OVER_PI / erfcx(-np.asarray(x, dtype=float) / _SQRT2)


def truncnorm_mean(loc, positive):
    """Mean of N(loc, 1) restricted to (0, inf) where ``positive`` else (-inf, 0).

    >>> round(float(truncnorm_mean(0.0, True)), 6)
    0.797885
    """
    loc = np.asarray(loc, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    up = loc + mills_ratio_pos(loc)
    down = loc - mills_ratio_pos(-loc)
    out = np.where(positive, up, down)
    return out if out.ndim else float(out)


def sample_truncnorm(loc, positive, rng):
    """Inverse-CDF draws of N(loc, 1) truncated to the half-line picked by ``positive``.

    Works in log space so locations deep in the excluded tail stay finite.
    """
    loc = np.asarray(loc, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    # for positive: z = x - loc > -loc; reflect to w = -z < loc (upper-truncated)
    # for negative: z < -loc directly
    bound = np.where(positive, loc, -loc)
    logu = np.log1p(-rng.uniform(size=loc.shape))  # log of a U(0, 1] draw
    w = ndtri_exp(logu + log_ndtr(bound))
    w = np.minimum(w, bound)
    z = np.where(positive, -w, w)
    return loc + z
