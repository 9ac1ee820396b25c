"""MMSE gain functions driven by a priori and a posteriori SNR estimates.

Three suppression rules, all closed-form in xi and gamma:

  srwf       G = sqrt(xi / (xi + 1))
  mmse-stsa  G = (sqrt(pi)/2) (sqrt(nu)/gamma) exp(-nu/2) [(1+nu) I0(nu/2) + nu I1(nu/2)]
  mmse-lsa   G = xi/(xi+1) * exp(E1(nu)/2)

with nu = xi*gamma/(xi+1).  The STSA rule folds exp(-nu/2) into the
exponentially scaled Bessel forms, which keeps it finite for arbitrarily
large nu (it tends to the Wiener gain xi/(xi+1) from above).
"""

import numpy as np

from .snrmap import SnrGrid
from .special import SQRT_PI, bessel_i0e, bessel_i1e, exp_integral_e1

GAIN_KINDS = ("srwf", "mmse-stsa", "mmse-lsa")

GAIN_CAP = 10.0    # suppression rules are capped here; srwf never reaches it
NU_FLOOR = 1e-10   # nu floored before E1/Bessel evaluation


def nu(xi: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """nu = xi*gamma/(xi+1), floored at NU_FLOOR."""
    return np.maximum(xi * gamma / (xi + 1.0), NU_FLOOR)


def srwf(xi: np.ndarray) -> np.ndarray:
    """Square-root Wiener filter. Depends on xi only."""
    return np.sqrt(xi / (xi + 1.0))


def mmse_stsa(xi: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """MMSE short-time spectral amplitude estimator gain."""
    v = nu(xi, gamma)
    h = 0.5 * v
    g = (SQRT_PI / 2.0) * (np.sqrt(v) / gamma) * (
        (1.0 + v) * bessel_i0e(h) + v * bessel_i1e(h))
    return np.minimum(g, GAIN_CAP)


def mmse_lsa(xi: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """MMSE log-spectral amplitude estimator gain."""
    v = nu(xi, gamma)
    g = xi / (xi + 1.0) * np.exp(0.5 * exp_integral_e1(v))
    return np.minimum(g, GAIN_CAP)


def gain(kind: str, xi: SnrGrid, gamma: SnrGrid) -> np.ndarray:
    """Evaluate one suppression rule on validated SNR grids."""
    if kind not in GAIN_KINDS:
        raise ValueError(f"unknown gain kind {kind!r}; choose from {GAIN_KINDS}")
    if xi.kind != "xi_linear":
        raise ValueError(f"expected a xi_linear grid, got {xi.kind}")
    if gamma.kind != "gamma":
        raise ValueError(f"expected a gamma grid, got {gamma.kind}")
    if xi.shape != gamma.shape:
        raise ValueError("xi and gamma grids must share a shape")
    if kind == "srwf":
        return srwf(xi.values)
    if kind == "mmse-stsa":
        return mmse_stsa(xi.values, gamma.values)
    return mmse_lsa(xi.values, gamma.values)
