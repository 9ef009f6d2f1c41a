"""Standard-normal special functions.

Every tail probability, density and quantile used by the rest of the
package goes through the four functions here, so numerical accuracy is
controlled in one place.  All functions accept scalars or arrays and
broadcast like ufuncs; scalar input gives a scalar back.
"""

from __future__ import annotations

import numpy as np
from scipy import special

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)
_INV_SQRT_2 = 1.0 / np.sqrt(2.0)


def std_normal_pdf(x):
    """Density of the standard normal at x."""
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out[()]


def std_normal_cdf(x):
    """P(Z <= x) for Z ~ N(0, 1), accurate in both tails."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(-x * _INV_SQRT_2)
    return out[()]


def q_function(x):
    """Upper tail P(Z > x), with full relative accuracy for large x.

    Prefer this over ``1 - std_normal_cdf(x)`` whenever x may be more
    than a few units from the origin: the subtraction loses all digits
    around x ~ 8 while erfc keeps them.
    """
    x = np.asarray(x, dtype=float)
    out = 0.5 * special.erfc(x * _INV_SQRT_2)
    return out[()]


def std_normal_quantile(p):
    """Inverse of ``std_normal_cdf``.

    Parameters
    ----------
    p : float or array_like
        Probability, strictly inside (0, 1).

    Returns
    -------
    x with |std_normal_cdf(x) - p| below 1e-12 (far smaller in practice):
    the vendor inverse is polished with safeguarded Newton steps on this
    module's own cdf, so the pair is self-consistent by construction.
    """
    p = np.asarray(p, dtype=float)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValueError("std_normal_quantile requires 0 < p < 1")
    x = special.ndtri(p)
    for _ in range(2):
        err = std_normal_cdf(x) - p
        # step clip keeps Newton inside the basin in the far tails
        step = np.clip(err / np.maximum(std_normal_pdf(x), 1e-300), -1.0, 1.0)
        x = x - step
    return x[()]
