"""Special functions needed by the SNR map and the MMSE gain rules.

Everything here is self-contained: series, continued fractions and Newton
iteration over numpy arrays, float64 throughout.  Inputs may be scalars or
arrays; scalars come back as python floats.
"""

import numpy as np

SQRT_PI = 1.7724538509055160273
TWO_OVER_SQRT_PI = 2.0 / SQRT_PI
EULER_GAMMA = 0.5772156649015328606

# Series/asymptotic crossovers.
_ERF_SERIES_MAX = 3.0
_I0_OVERFLOW_GUARD = 700.0   # I0(x) ~ e^x/sqrt(2*pi*x) overflows float64 near 713.
_IE_ASYMPTOTIC_MIN = 30.0


def _wrap(x):
    a = np.asarray(x, dtype=np.float64)
    return a, (a.ndim == 0)


def _unwrap(a, scalar):
    return float(a) if scalar else a


def erf(x):
    """Error function.

    Maclaurin series for |x| <= 3, continued-fraction complement beyond.
    Good to ~1e-13 absolute over the real line.
    """
    a, scalar = _wrap(x)
    a = np.atleast_1d(a)
    out = np.empty_like(a)

    small = np.abs(a) <= _ERF_SERIES_MAX
    if small.any():
        z = a[small]
        term = z.copy()
        acc = z.copy()
        z2 = z * z
        for n in range(1, 120):
            term = term * (-z2) * (2 * n - 1) / (n * (2 * n + 1))
            acc += term
            if np.max(np.abs(term)) < 1e-18:
                break
        out[small] = TWO_OVER_SQRT_PI * acc
    if (~small).any():
        z = np.abs(a[~small])
        out[~small] = np.sign(a[~small]) * (1.0 - _erfc_cf(z))

    return _unwrap(out.reshape(np.shape(x)) if not scalar else out[0], scalar)


def _erfc_cf(z):
    # erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    # evaluated bottom-up at fixed depth; ample for z >= 3.
    r = np.zeros_like(z)
    for n in range(60, 0, -1):
        r = (0.5 * n) / (z + r)
    with np.errstate(under="ignore"):
        return np.exp(-z * z) / (SQRT_PI * (z + r))


def erfinv(y):
    """Inverse error function on (-1, 1): Newton iteration on erf.

    The starting point is Winitzki's log approximation, accurate to ~1e-3,
    after which a handful of Newton steps reach float64 precision.
    """
    a, scalar = _wrap(y)
    if np.any(np.abs(a) >= 1.0):
        raise ValueError("erfinv argument must lie strictly inside (-1, 1)")
    w = 0.147
    ln1my2 = np.log1p(-a * a)
    u = 2.0 / (np.pi * w) + 0.5 * ln1my2
    x = np.sign(a) * np.sqrt(np.sqrt(u * u - ln1my2 / w) - u)
    for _ in range(6):
        x = x - (erf(x) - a) * (0.5 * SQRT_PI) * np.exp(x * x)
    return _unwrap(x, scalar)


def bessel_i0(x):
    """Modified Bessel function I0 by power series: sum (x/2)^(2m) / (m!)^2."""
    return _bessel_series(x, order=0)


def bessel_i1(x):
    """Modified Bessel function I1 by power series: sum (x/2)^(2m+1) / (m!(m+1)!)."""
    return _bessel_series(x, order=1)


def _bessel_series(x, order):
    a, scalar = _wrap(x)
    if np.any(a < 0.0):
        raise ValueError("bessel_i0/i1 defined here for x >= 0 only")
    if np.any(a > _I0_OVERFLOW_GUARD):
        raise ValueError(
            f"bessel series overflows float64 beyond x = {_I0_OVERFLOW_GUARD:g}; "
            "use the exponentially scaled forms")
    h = 0.5 * a
    h2 = h * h
    term = np.ones_like(a) if order == 0 else h.copy()
    acc = term.copy()
    for m in range(1, 1200):
        term = term * h2 / (m * (m + order))
        acc += term
        if np.max(term) <= 1e-17 * np.max(acc):
            break
    return _unwrap(acc, scalar)


def bessel_i0e(x):
    """exp(-x) * I0(x), stable for all x >= 0 (no overflow)."""
    return _bessel_scaled(x, order=0)


def bessel_i1e(x):
    """exp(-x) * I1(x), stable for all x >= 0 (no overflow)."""
    return _bessel_scaled(x, order=1)


def _bessel_scaled(x, order):
    a, scalar = _wrap(x)
    if np.any(a < 0.0):
        raise ValueError("scaled bessel forms defined for x >= 0 only")
    a = np.atleast_1d(a)
    out = np.empty_like(a)

    small = a <= _IE_ASYMPTOTIC_MIN
    if small.any():
        z = a[small]
        with np.errstate(under="ignore"):
            out[small] = _bessel_series(z, order) * np.exp(-z)
    if (~small).any():
        # I_nu(x) e^{-x} ~ (2*pi*x)^(-1/2) * sum_k (-1)^k prod_j (mu-(2j-1)^2)/(k! (8x)^k),
        # mu = 4 nu^2.  Truncated where terms stop shrinking.
        z = a[~small]
        mu = 4.0 * order * order
        term = np.ones_like(z)
        acc = np.ones_like(z)
        for k in range(1, 30):
            term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
            # asymptotic sign convention folds into the factor above:
            # for nu=0 the product is negative each step, giving +1/(8x) etc.
            term = -term
            acc += term
            if np.max(np.abs(term)) < 1e-17:
                break
        out[~small] = acc / np.sqrt(2.0 * np.pi * z)

    return _unwrap(out.reshape(np.shape(x)) if not scalar else out[0], scalar)


def exp_integral_e1(x):
    """Exponential integral E1(x) = int_x^inf exp(-t)/t dt for x > 0.

    Power series for x <= 1, continued fraction beyond; ~1e-13 relative.
    """
    a, scalar = _wrap(x)
    if np.any(a <= 0.0):
        raise ValueError("exp_integral_e1 requires x > 0")
    a = np.atleast_1d(a)
    out = np.empty_like(a)

    small = a <= 1.0
    if small.any():
        z = a[small]
        # E1(x) = -gamma - ln x + sum_{m>=1} (-1)^(m+1) x^m / (m * m!)
        pw = z.copy()
        acc = z.copy()
        for m in range(2, 40):
            pw = pw * (-z) / m
            acc += pw / m
            if np.max(np.abs(pw)) < 1e-18:
                break
        out[small] = -EULER_GAMMA - np.log(z) + acc
    if (~small).any():
        # E1(x) = exp(-x) / (x + 1 - 1^2/(x + 3 - 2^2/(x + 5 - ...))), bottom-up.
        z = a[~small]
        r = np.zeros_like(z)
        for n in range(120, 0, -1):
            r = (n * n) / (z + (2 * n + 1) - r)
        with np.errstate(under="ignore"):
            out[~small] = np.exp(-z) / (z + 1.0 - r)

    return _unwrap(out.reshape(np.shape(x)) if not scalar else out[0], scalar)
