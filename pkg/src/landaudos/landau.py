"""Landau-level geometry in the symmetric gauge.

Points of the plane are arrays whose last axis has length two.  Lengths
are measured in the same units as ``B**-0.5``.  Radial integrals are done
in the variable ``xi = B r^2 / 2`` with generalized Gauss-Laguerre rules,
for which ``d^2x = (1/B) dxi dtheta``.

The angular-momentum basis is indexed either by the angular momentum
``k >= -ell`` or, in matrix code, by the guiding-center index
``a = k + ell`` running over ``0..n-1``.
"""

import functools
import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import kernels
from .errors import DomainError, QuadratureError
from .specfun import bessel_j, laguerre, laguerre_function

__all__ = [
    "LandauBasis",
    "RadialGrid",
    "gauss_laguerre",
    "polar_grid",
    "integrate_plane",
    "projection_kernel",
    "coherent_state",
    "basis_function",
    "magnetic_translate",
    "radial_matrix_element",
    "plane_wave_matrix_element",
    "form_factor",
    "plane_wave_table",
    "profile_cache",
]


@dataclass(frozen=True)
class LandauBasis:
    """Truncated angular-momentum basis of the Landau level ``ell``.

    Attributes
    ----------
    B : float
        Magnetic field strength.
    ell : int
        Landau level index.
    n : int
        Number of basis states, angular momenta ``-ell .. n-ell-1``.
    """

    B: float
    ell: int
    n: int

    def __post_init__(self):
        if not self.B > 0:
            raise DomainError("B must be positive")
        if int(self.ell) != self.ell or self.ell < 0:
            raise DomainError("ell must be a non-negative integer")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")

    @property
    def momenta(self):
        return np.arange(-self.ell, self.n - self.ell)


@dataclass(frozen=True)
class RadialGrid:
    """Polar product rule for integrals over a disk.

    ``weights`` are area weights of the radial shells (they already
    include the full angle), so they add up to ``pi r_max^2``.  A point at
    radius ``nodes[i]`` and one of the ``angular_order`` equispaced angles
    carries weight ``weights[i] / angular_order``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    angular_order: int

    def __post_init__(self):
        if self.angular_order < 2 or self.angular_order % 2:
            raise DomainError("angular_order must be even")

    @property
    def angles(self):
        return 2.0 * np.pi * (np.arange(self.angular_order) + 0.5) / self.angular_order

    def points(self, center=(0.0, 0.0)):
        """Return quadrature points, shape (n_radial, angular_order, 2), and weights."""
        th = self.angles
        x = center[0] + self.nodes[:, None] * np.cos(th)[None, :]
        y = center[1] + self.nodes[:, None] * np.sin(th)[None, :]
        w = np.broadcast_to(self.weights[:, None] / self.angular_order, x.shape)
        return np.stack([x, y], axis=-1), w


@functools.lru_cache(maxsize=256)
def gauss_laguerre(order, alpha=0.0):
    """Nodes and normalized weights of the generalized Gauss-Laguerre rule.

    The weights sum to one, i.e. the rule integrates against the
    probability density ``x^alpha e^{-x} / Gamma(alpha+1)``.  Computed by
    the Golub-Welsch method so large ``alpha`` does not overflow.
    """
    i = np.arange(order, dtype=float)
    diag = 2.0 * i + alpha + 1.0
    off = np.sqrt(i[1:] * (i[1:] + alpha))
    nodes, vecs = linalg.eigh_tridiagonal(diag, off)
    weights = vecs[0, :] ** 2
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def polar_grid(r_max, radial_order=64, panels=8, angular_order=64):
    """Composite Gauss-Legendre rule in ``r^2`` over the disk of radius ``r_max``."""
    x, w = np.polynomial.legendre.leggauss(radial_order)
    edges = np.linspace(0.0, r_max**2, panels + 1)
    u = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    wu = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    return RadialGrid(np.sqrt(u), np.pi * wu, angular_order)


def integrate_plane(f, grid, center=(0.0, 0.0)):
    """Integrate ``f(points)`` over the disk described by ``grid``."""
    pts, w = grid.points(center)
    return np.sum(w * f(pts))


def _split(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1]


def projection_kernel(basis, x, y):
    """Integral kernel P_ell(x, y) of the Landau-level projection."""
    B = basis.B
    x1, x2 = _split(x)
    y1, y2 = _split(y)
    d2 = (x1 - y1) ** 2 + (x2 - y2) ** 2
    phase = 0.5 * B * (x2 * y1 - x1 * y2)
    val = (B / (2 * np.pi)) * np.exp(1j * phase - 0.25 * B * d2) * laguerre(basis.ell, 0, 0.5 * B * d2)
    return val


def coherent_state(basis, x, y):
    """Coherent state psi_{ell,x}(y) = sqrt(2 pi / B) P_ell(y, x)."""
    return math.sqrt(2 * np.pi / basis.B) * projection_kernel(basis, y, x)


def basis_function(basis, k, x):
    """Angular-momentum eigenfunction phi_{ell,k}(x)."""
    if k < -basis.ell:
        raise DomainError("k must be at least -ell")
    x1, x2 = _split(x)
    xi = 0.5 * basis.B * (x1**2 + x2**2)
    theta = np.arctan2(x2, x1)
    return (
        math.sqrt(basis.B / (2 * np.pi))
        * np.exp(1j * k * theta)
        * laguerre_function(basis.ell, k, xi)
    )


def magnetic_translate(basis, x, f):
    """Magnetic translation T_x f(y) = exp[i(B/2)(x1 y2 - x2 y1)] f(y - x)."""
    x = np.asarray(x, dtype=float)
    B = basis.B

    def translated(y):
        y = np.asarray(y, dtype=float)
        phase = 0.5 * B * (x[0] * y[..., 1] - x[1] * y[..., 0])
        return np.exp(1j * phase) * f(y - x)

    return translated


_RADIAL_ORDERS = (128, 256, 512, 1024)


def _reduced_profile(ell, k, xi):
    """Radial profile divided by ``xi^{|k|/2} e^{-xi/2}``, plus its log prefactor."""
    m = abs(k)
    a = ell if k >= 0 else ell - m
    sign = -1.0 if (k < 0 and m % 2) else 1.0
    logc = 0.5 * (math.lgamma(a + 1) - math.lgamma(a + m + 1))
    return sign * laguerre(a, m, xi), logc


class _ProfileCache:
    """Radial profiles tabulated on Gauss-Laguerre nodes.

    Filling is guarded by a lock.  After :meth:`freeze` the cache is
    read-only: misses are computed but not stored, so any number of
    concurrent readers never mutate shared state.
    """

    def __init__(self):
        self._data = {}
        self._lock = threading.Lock()
        self.frozen = False

    def __len__(self):
        return len(self._data)

    def get(self, ell, k, order, alpha):
        key = (ell, k, order, alpha)
        hit = self._data.get(key)
        if hit is not None:
            return hit
        nodes, _ = gauss_laguerre(order, alpha)
        vals, logc = _reduced_profile(ell, k, nodes)
        vals.setflags(write=False)
        if not self.frozen:
            with self._lock:
                assert not self.frozen
                self._data.setdefault(key, (vals, logc))
        return vals, logc

    def freeze(self):
        self.frozen = True

    def clear(self):
        with self._lock:
            self._data.clear()
            self.frozen = False


profile_cache = _ProfileCache()


def radial_matrix_element(basis, j, k, f, rtol=1e-8):
    """Matrix element <phi_{ell,j}, f phi_{ell,k}> of a radial function.

    Parameters
    ----------
    f : callable
        Radial function of the radius ``r`` (vectorized).

    Returns zero exactly for ``j != k``.  The diagonal element is computed
    with generalized Gauss-Laguerre rules in ``xi`` of increasing order
    until two successive orders agree to ``rtol``.
    """
    ell = basis.ell
    if j < -ell or k < -ell:
        raise DomainError("angular momenta must be at least -ell")
    if j != k:
        return 0.0
    m = abs(k)
    a = ell if k >= 0 else ell - m
    log_scale = math.lgamma(m + 1) + math.lgamma(a + 1) - math.lgamma(a + m + 1)
    prev = None
    for order in _RADIAL_ORDERS:
        nodes, weights = gauss_laguerre(order, float(m))
        lag = laguerre(a, m, nodes)
        r = np.sqrt(2.0 * nodes / basis.B)
        val = math.exp(log_scale) * float(np.sum(weights * lag**2 * f(r)))
        if prev is not None and abs(val - prev) <= rtol * abs(val) + 1e-15:
            return val
        prev = val
    raise QuadratureError(f"radial quadrature for k={k} did not converge")


def plane_wave_matrix_element(basis, j, k, q, atol=1e-12):
    """Matrix element <phi_{ell,j}, exp(i q.x) phi_{ell,k}>.

    Computed as ``exp(i (k-j) arg q) i^{k-j}`` times the radial integral
    of the two profiles against ``J_{k-j}(|q| r)``, using Gauss-Laguerre
    rules in ``xi`` of increasing order until two orders agree to
    ``atol``.
    """
    ell = basis.ell
    if j < -ell or k < -ell:
        raise DomainError("angular momenta must be at least -ell")
    q = np.asarray(q, dtype=float)
    qn = math.hypot(q[0], q[1])
    theta = math.atan2(q[1], q[0])
    p = k - j
    # J_p(2 sqrt(s xi)) / xi^{|p|/2} is smooth in xi, so the weight absorbs
    # xi^{|p|/2} as well and alpha is always an integer
    alpha = 0.5 * (abs(j) + abs(k) + abs(p))
    s = qn * qn / (2.0 * basis.B)
    prev = None
    for order in _RADIAL_ORDERS:
        nodes, weights = gauss_laguerre(order, alpha)
        pj, cj = profile_cache.get(ell, j, order, alpha)
        pk, ck = profile_cache.get(ell, k, order, alpha)
        scale = math.exp(math.lgamma(alpha + 1) + cj + ck)
        bess = bessel_j(p, 2.0 * np.sqrt(s * nodes)) / nodes ** (0.5 * abs(p))
        radial = scale * float(np.sum(weights * pj * pk * bess))
        if prev is not None and abs(radial - prev) <= atol:
            return complex(np.exp(1j * p * theta) * (1j) ** (p % 4) * radial)
        prev = radial
    raise QuadratureError("plane-wave radial integral did not converge")


def form_factor(ell, s):
    """Level form factor ``e^{-s/2} L_ell(s)`` with ``s = |q|^2 / 2B``."""
    s = np.asarray(s, dtype=float)
    return np.exp(-0.5 * s) * laguerre(ell, 0, s)


def plane_wave_table(basis, s):
    """Radial plane-wave integrals for all basis pairs at several ``s``.

    Returns ``I`` of shape ``(len(s), n, n)`` with
    ``<phi_a, e^{iq.x} phi_b> = e^{i(b-a) arg q} i^{b-a} I[t, a, b]`` for
    ``|q|^2 / 2B = s[t]`` and guiding-center indices ``a, b``.  Uses the
    factorization into the level form factor and guiding-center Laguerre
    functions, evaluated by a stable recurrence.
    """
    s = np.ascontiguousarray(np.atleast_1d(s), dtype=float)
    table = kernels.gc_table(s, basis.n)
    return form_factor(basis.ell, s)[:, None, None] * table
