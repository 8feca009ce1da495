"""Special functions used throughout the package.

Generalized Laguerre and Legendre polynomials are evaluated with their
three-term recurrences, the Dawson integral with a positive-term series
and an asymptotic expansion, and the level profile ``G_{l,n}`` from the
normalized radial functions of the angular-momentum basis.

All functions accept scalars or numpy arrays for the continuous argument
and return an array of matching shape (a Python float for scalar input).
"""

import math

import numpy as np
from scipy import integrate, special

from .errors import DomainError

__all__ = [
    "laguerre",
    "laguerre_function",
    "legendre",
    "bessel_j",
    "dawson",
    "incomplete_exp",
    "g_function",
    "g_recurrence_defect",
    "g_tail_integral",
]


def _as_output(values, scalar):
    if scalar:
        return float(values)
    return values


def _check_nonnegative(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(np.isnan(xi)):
        raise DomainError("argument must be non-negative")
    return xi


def _laguerre_recurrence(degree, alpha, x):
    """L^{(alpha)}_degree(x) for alpha >= 0 by upward recurrence in the degree."""
    prev = np.ones_like(x)
    if degree == 0:
        return prev
    cur = 1.0 + alpha - x
    for j in range(1, degree):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur


def laguerre(ell, k, xi):
    """Generalized Laguerre polynomial L^{(k)}_ell(xi).

    Parameters
    ----------
    ell : int
        Degree, ``ell >= 0``.
    k : int
        Superscript, ``k >= -ell``.  Negative superscripts are reduced to
        positive ones with the reflection identity
        ``L^{(-m)}_ell(x) = (-x)^m (ell-m)!/ell! L^{(m)}_{ell-m}(x)``.
    xi : float or array_like
        Non-negative argument.

    Returns
    -------
    float or ndarray
    """
    ell = int(ell)
    k = int(k)
    if ell < 0 or k < -ell:
        raise DomainError(f"invalid Laguerre order (ell={ell}, k={k})")
    scalar = np.ndim(xi) == 0
    x = _check_nonnegative(xi)
    if k >= 0:
        out = _laguerre_recurrence(ell, float(k), x)
    else:
        m = -k
        ratio = math.exp(math.lgamma(ell - m + 1) - math.lgamma(ell + 1))
        out = (-x) ** m * ratio * _laguerre_recurrence(ell - m, float(m), x)
    return _as_output(out, scalar)


def laguerre_function(ell, k, xi):
    """Normalized radial profile of the basis function phi_{ell,k}.

    Returns ``sqrt(ell!/(ell+k)!) xi^{k/2} L^{(k)}_ell(xi) e^{-xi/2}``,
    which for ``k < 0`` equals
    ``(-1)^m sqrt((ell-m)!/ell!) xi^{m/2} L^{(m)}_{ell-m}(xi) e^{-xi/2}``
    with ``m = -k``.  The squares integrate to one over ``xi`` in
    ``[0, inf)``.  Factorial ratios and powers are combined in log space
    so that large ``k`` does not overflow.
    """
    ell = int(ell)
    k = int(k)
    if ell < 0 or k < -ell:
        raise DomainError(f"invalid Laguerre order (ell={ell}, k={k})")
    scalar = np.ndim(xi) == 0
    x = _check_nonnegative(xi)
    m = abs(k)
    a = ell if k >= 0 else ell - m
    sign = -1.0 if (k < 0 and m % 2) else 1.0
    with np.errstate(divide="ignore"):
        log_env = (
            0.5 * (math.lgamma(a + 1) - math.lgamma(a + m + 1))
            + 0.5 * special.xlogy(m, x)
            - 0.5 * x
        )
    out = sign * np.exp(log_env) * _laguerre_recurrence(a, float(m), x)
    return _as_output(out, scalar)


def legendre(ell, xi):
    """Legendre polynomial P_ell(xi) via Bonnet's recurrence."""
    ell = int(ell)
    if ell < 0:
        raise DomainError("Legendre degree must be non-negative")
    scalar = np.ndim(xi) == 0
    x = np.asarray(xi, dtype=float)
    prev = np.ones_like(x)
    cur = x.copy()
    if ell == 0:
        cur = prev
    for j in range(1, ell):
        prev, cur = cur, ((2 * j + 1) * x * cur - j * prev) / (j + 1)
    return _as_output(cur, scalar)


def bessel_j(order, x):
    """Bessel function of the first kind of integer order."""
    return special.jv(int(order), x)


_DAWSON_SERIES_LIMIT = 25.0


def _dawson_series(x):
    # e^{-x^2} * sum_n x^{2n+1} / (n! (2n+1)); every term is positive
    x2 = x * x
    term = x.copy()
    total = x.copy()
    nmax = int(x2.max() + 12.0 * math.sqrt(x2.max() + 1.0) + 40) if x.size else 0
    for n in range(1, nmax):
        term = term * x2 / n
        total = total + term / (2 * n + 1)
    return np.exp(-x2) * total


def _dawson_asymptotic(x):
    # F(x) ~ 1/(2x) sum_k (2k-1)!! / (2x^2)^k
    inv = 1.0 / (2.0 * x * x)
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 40):
        term = term * (2 * k - 1) * inv
        total = total + term
    return total / (2.0 * x)


def dawson(eta):
    """Dawson integral F(eta) = exp(-eta^2) * int_0^eta exp(t^2) dt.

    A positive-term power series is used for ``|eta| <= 25`` (no
    cancellation, so relative accuracy is uniform) and the divergent
    asymptotic expansion, truncated well before its smallest term,
    beyond.
    """
    scalar = np.ndim(eta) == 0
    x = np.atleast_1d(np.asarray(eta, dtype=float))
    ax = np.abs(x)
    out = np.empty_like(ax)
    small = ax <= _DAWSON_SERIES_LIMIT
    if np.any(small):
        out[small] = _dawson_series(ax[small])
    if np.any(~small):
        out[~small] = _dawson_asymptotic(ax[~small])
    out = np.copysign(out, x)
    if scalar:
        return float(out[0])
    return out.reshape(np.shape(eta))


def incomplete_exp(n, xi):
    """Truncated exponential series e_n(xi) = sum_{k<n} xi^k / k!.

    Terms are accumulated with Neumaier's compensated summation.

    Raises
    ------
    OverflowError
        If a term or the running sum leaves the double range.
    """
    n = int(n)
    if n < 1:
        raise DomainError("n must be positive")
    xi = float(xi)
    if xi < 0 or math.isnan(xi):
        raise DomainError("argument must be non-negative")
    total = 0.0
    comp = 0.0
    term = 1.0
    for k in range(n):
        if k > 0:
            term = term * xi / k
        if not math.isfinite(term):
            raise OverflowError(f"term {k} of e_{n}({xi}) overflows")
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        if not math.isfinite(total):
            raise OverflowError(f"partial sum of e_{n}({xi}) overflows")
    return total + comp


def g_function(ell, n, xi):
    """Diagonal profile G_{ell,n}(xi) of the truncated projection.

    ``G_{ell,n}(xi) = sum_{k=-ell}^{n-ell-1} R_{ell,k}(xi)^2`` where
    ``R_{ell,k}`` is :func:`laguerre_function`.  The value lies in
    ``[0, 1]`` up to rounding; at ``xi = 0`` it is one for ``n > ell``
    and zero otherwise.
    """
    ell = int(ell)
    n = int(n)
    if ell < 0 or n < 1:
        raise DomainError("need ell >= 0 and n >= 1")
    scalar = np.ndim(xi) == 0
    x = _check_nonnegative(np.atleast_1d(xi))
    total = np.zeros(x.shape)
    for k in range(-ell, n - ell):
        total += laguerre_function(ell, k, x) ** 2
    if scalar:
        return float(total[0])
    return total.reshape(np.shape(xi))


def g_recurrence_defect(ell, n, xi):
    """Residual of the level recurrence for G.

    Returns ``G_{ell,n} - G_{ell-1,n} - D_{ell,n}`` where
    ``D_{ell,n}(xi) = -e^{-xi} ((ell-1)!/(n-1)!) xi^{n-ell}
    L^{(n-ell)}_{ell-1}(xi) L^{(n-ell)}_ell(xi)``.  The prefactor is
    formed as ``-sqrt(n/ell) R_{ell-1,n-ell} R_{ell,n-ell}``, which is the
    same expression with the factorials and powers balanced.
    """
    ell = int(ell)
    n = int(n)
    if ell < 1:
        raise DomainError("ell must be at least 1")
    d = -math.sqrt(n / ell) * laguerre_function(ell - 1, n - ell, xi) * laguerre_function(
        ell, n - ell, xi
    )
    return g_function(ell, n, xi) - g_function(ell - 1, n, xi) - d


def _tail_envelope(ell, n):
    grid = np.linspace(1.0, 60.0, 4000)
    vals = g_function(ell, n, n * grid) * np.exp(grid)
    return 2.0 * float(vals.max())


def g_tail_integral(ell, n, tol=1e-10):
    """Tail integral s_{ell,n} = int_1^inf G_{ell,n}(n xi) d xi.

    The integrand is bounded by ``A exp(-xi)``; ``A`` is taken as twice the
    largest value of ``G_{ell,n}(n xi) e^{xi}`` on a grid over ``[1, 60]``,
    and the upper limit ``Xi = log(100 A / tol)`` makes the discarded
    tail at most ``tol / 100``.
    """
    ell = int(ell)
    n = int(n)
    if ell < 0 or n < 1:
        raise DomainError("need ell >= 0 and n >= 1")
    amp = _tail_envelope(ell, n)
    # the quadrature error budget is kept well below the truncation budget
    upper = max(math.log(amp / (0.01 * tol)), 2.0)
    w = 1.0 / math.sqrt(n)
    cuts = [1.0] + [1.0 + c * w for c in (1.0, 3.0, 10.0, 30.0) if 1.0 + c * w < upper] + [upper]

    def f(x):
        return g_function(ell, n, n * x)

    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)
        total += val
    return total
