"""Covariance models of the homogeneous Gaussian potential.

Every model is radial.  Its spectral measure is described in the
variable ``s = |k|^2 / 2B`` used by the Landau-level form factors, where
``d^2k = B ds dtheta``.  :meth:`SpectralMeasure.s_rule` turns integrals
``int C~(d^2k) h(|k|^2/2B)`` into finite sums, exactly for integrands
``h(s) = e^{-a s} * polynomial`` of bounded degree.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    PositivityViolationError,
    QuadratureError,
    UnsupportedOperationError,
)
from .landau import gauss_laguerre
from .specfun import bessel_j, laguerre

__all__ = [
    "CovarianceModel",
    "SpectralMeasure",
    "MuChoice",
    "CMu",
    "KINDS",
    "evaluate",
    "evaluate_radial",
    "spectral_measure",
    "c_mu",
]

KINDS = ("gaussian", "bessel_oscillating", "poly_gaussian", "delta_limit", "constant")


@dataclass(frozen=True)
class CovarianceModel:
    """Radial covariance function.

    Attributes
    ----------
    kind : str
        One of ``gaussian``, ``bessel_oscillating``, ``poly_gaussian``,
        ``delta_limit`` or ``constant``.
    c0 : float, optional
        Single-site variance ``C(0)``; absent for ``delta_limit``.
    tau : float, optional
        Correlation length; absent for ``delta_limit`` and ``constant``.
    alpha2 : float, optional
        White-noise strength, only for ``delta_limit``.
    """

    kind: str
    c0: float = None
    tau: float = None
    alpha2: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown covariance kind {self.kind!r}")
        if self.kind == "delta_limit":
            if self.alpha2 is None or not self.alpha2 > 0:
                raise DomainError("delta_limit needs alpha2 > 0")
            if self.c0 is not None or self.tau is not None:
                raise DomainError("delta_limit takes only alpha2")
            return
        if self.alpha2 is not None:
            raise DomainError("alpha2 is only meaningful for delta_limit")
        if self.c0 is None or not self.c0 > 0:
            raise DomainError("c0 must be positive")
        if self.kind == "constant":
            if self.tau is not None:
                raise DomainError("constant covariance takes no tau")
        elif self.tau is None or not self.tau > 0:
            raise DomainError("tau must be positive")

    @property
    def proper(self):
        """True when pointwise values and a finite spectral mass exist."""
        return self.kind != "delta_limit"

    @property
    def variance(self):
        """C(0), infinite for the white-noise limit."""
        return math.inf if self.kind == "delta_limit" else self.c0

    @classmethod
    def gaussian_surrogate(cls, model, B, btau2=1e-2):
        """Gaussian model approximating ``delta_limit`` with ``B tau^2 = btau2``."""
        if model.kind != "delta_limit":
            return model
        tau2 = btau2 / B
        return cls("gaussian", c0=model.alpha2 / (2 * math.pi * tau2), tau=math.sqrt(tau2))


def evaluate_radial(model, r):
    """Covariance as a function of the distance ``r``."""
    if model.kind == "delta_limit":
        raise UnsupportedOperationError("white noise has no pointwise covariance")
    r = np.asarray(r, dtype=float)
    if model.kind == "constant":
        return np.full(r.shape, model.c0) if r.ndim else model.c0
    u = r**2 / (2 * model.tau**2)
    if model.kind == "gaussian":
        return model.c0 * np.exp(-u)
    if model.kind == "poly_gaussian":
        return model.c0 * np.exp(-u) * (1.0 - 7.0 * u / 8.0 + u * u / 8.0)
    return model.c0 * bessel_j(0, math.sqrt(2.0) * r / model.tau)


def evaluate(model, x):
    """Covariance C(x) at plane points ``x`` (last axis of length two)."""
    x = np.asarray(x, dtype=float)
    return evaluate_radial(model, np.hypot(x[..., 0], x[..., 1]))


@dataclass(frozen=True)
class SpectralMeasure:
    """Spectral measure C~ of a radial covariance.

    Attributes
    ----------
    kind : str
        ``radial_density``, ``circle``, ``point`` (mass at the origin) or
        ``flat`` (constant density, improper).
    mass : float
        Total mass, ``inf`` for the improper flat measure.
    circle_radius : float, optional
        Radius of the circle carrying the mass.
    improper : bool
    """

    kind: str
    model: CovarianceModel = field(repr=False)
    mass: float
    circle_radius: float = None
    improper: bool = False

    def density(self, k):
        """Density per d^2k as a function of ``|k|`` (density kinds only)."""
        m = self.model
        k = np.asarray(k, dtype=float)
        if self.kind == "flat":
            return np.full(k.shape, m.alpha2 / (2 * math.pi) ** 2)
        if self.kind != "radial_density":
            raise UnsupportedOperationError(f"{self.kind} measure has no density")
        v = 0.5 * m.tau**2 * k**2
        base = m.c0 * m.tau**2 / (2 * math.pi) * np.exp(-v)
        if m.kind == "gaussian":
            return base
        return base * (3.0 + 3.0 * v + v * v) / 8.0

    def s_density(self, s, B):
        """Density per ds, ``2 pi B`` times the density per d^2k."""
        s = np.asarray(s, dtype=float)
        return 2 * math.pi * B * self.density(np.sqrt(2 * B * s))

    def _s_polynomial(self, s, B):
        # s_density(s) * exp(s_rate * s), a polynomial in s
        m = self.model
        if self.kind == "flat":
            return np.full(np.shape(s), m.alpha2 * B / (2 * math.pi))
        v = B * m.tau**2 * s
        base = m.c0 * B * m.tau**2 * np.ones_like(s)
        if m.kind == "gaussian":
            return base
        return base * (3.0 + 3.0 * v + v * v) / 8.0

    def s_atom(self, B):
        """Location in ``s`` of the atom of a circle or point measure."""
        if self.kind == "point":
            return 0.0
        if self.kind == "circle":
            # circle_radius^2 / 2B written without the rounding of sqrt(2)^2
            return 1.0 / (B * self.model.tau**2)
        raise UnsupportedOperationError("measure has no atom")

    def s_rate(self, B):
        """Exponential decay rate in ``s`` of a density kind."""
        if self.kind == "flat":
            return 0.0
        return B * self.model.tau**2

    def s_rule(self, B, extra_rate, degree):
        """Nodes and weights for ``int ds c~_s(s) h(s)``.

        Exact when ``h(s) e^{extra_rate s}`` is a polynomial of degree at
        most ``degree``.  The weights absorb the density and the factor
        ``e^{extra_rate s}``.
        """
        if self.kind in ("point", "circle"):
            return np.array([self.s_atom(B)]), np.array([self.mass])
        rate = self.s_rate(B) + extra_rate
        if not rate > 0:
            raise DomainError("integrand must decay for the white-noise measure")
        poly = 2 if self.model.kind == "poly_gaussian" else 0
        order = (degree + poly) // 2 + 2
        t, w = gauss_laguerre(order, 0.0)
        s = t / rate
        # combine in log space: w underflows exactly where e^{extra s} overflows
        with np.errstate(divide="ignore", over="ignore"):
            weights = np.exp(np.log(w) + extra_rate * s) * self._s_polynomial(s, B) / rate
        if not np.all(np.isfinite(weights)):
            raise QuadratureError("spectral rule overflows; degree too large")
        return s, weights

    def integrate(self, h, B, extra_rate=0.0, rtol=1e-12, max_order=1024):
        """Adaptive ``int ds c~_s(s) h(s)`` for a general vectorized ``h``.

        ``extra_rate`` is a decay rate of ``h`` that the rule can absorb.
        The order is doubled until two successive values agree to ``rtol``
        times the integral of the absolute integrand.
        """
        if self.kind in ("point", "circle"):
            return float(self.mass * h(np.array([self.s_atom(B)]))[0])
        prev = None
        degree = 32
        while degree <= 2 * max_order:
            s, w = self.s_rule(B, extra_rate, degree)
            hs = h(s)
            val = float(np.sum(w * hs))
            # tolerance relative to int |c~ h| so cancelling integrands can converge
            scale = float(np.sum(np.abs(w * hs)))
            if prev is not None and abs(val - prev) <= rtol * scale + 1e-300:
                return val
            prev = val
            degree *= 2
        raise QuadratureError("spectral integral did not converge")

    def inverse_transform(self, r):
        """Reconstruct C(r) = int C~(d^2k) e^{ik.x} by Hankel quadrature."""
        if self.improper:
            raise UnsupportedOperationError("white noise has no pointwise covariance")
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty(r.shape)
        for i, ri in enumerate(r.flat):
            # with B = 1, |k| = sqrt(2 s)
            out.flat[i] = self.integrate(lambda s: bessel_j(0, np.sqrt(2 * s) * ri), 1.0)
        return out


def spectral_measure(model):
    """Spectral measure of ``model`` (Bochner normalization, mass ``C(0)``)."""
    if model.kind in ("gaussian", "poly_gaussian"):
        return SpectralMeasure("radial_density", model, model.c0)
    if model.kind == "bessel_oscillating":
        return SpectralMeasure("circle", model, model.c0, circle_radius=math.sqrt(2.0) / model.tau)
    if model.kind == "constant":
        return SpectralMeasure("point", model, model.c0)
    return SpectralMeasure("flat", model, math.inf, improper=True)


MU_KINDS = ("point_mass", "coherent_density", "custom_radial")


@dataclass(frozen=True)
class MuChoice:
    """Radial measure mu used to smooth the covariance.

    Attributes
    ----------
    kind : str
        ``point_mass``, ``coherent_density`` or ``custom_radial``.
    ell, k : int
        For ``coherent_density``: the density ``|phi_{ell,k}|^2`` is used;
        ``k = 0`` gives the coherent state ``psi_{ell,0}`` and ``k = -ell``
        the maximizer of the decay functional for Gaussian covariances.
    radii, weights : tuple of float
        For ``custom_radial``: tabulated density (per unit area, up to
        normalization) at increasing radii, linearly interpolated and zero
        beyond the last radius.
    """

    kind: str
    ell: int = 0
    k: int = 0
    radii: tuple = None
    weights: tuple = None

    def __post_init__(self):
        if self.kind not in MU_KINDS:
            raise DomainError(f"unknown mu kind {self.kind!r}")
        if self.kind == "coherent_density" and (self.ell < 0 or self.k < -self.ell):
            raise DomainError("need ell >= 0 and k >= -ell")
        if self.kind == "custom_radial":
            r = np.asarray(self.radii, dtype=float)
            w = np.asarray(self.weights, dtype=float)
            if r.ndim != 1 or r.shape != w.shape or r.size < 2:
                raise DomainError("custom mu needs matching radii and weights")
            if r[0] != 0.0 or np.any(np.diff(r) <= 0):
                raise DomainError("custom mu radii must start at 0 and increase")
            if np.any(w < 0):
                raise DomainError("custom mu must be a positive measure")


@dataclass
class CMu:
    """Smoothed covariance ``C_mu`` as a radial function.

    Attributes
    ----------
    mu : MuChoice
    normalization : float
        Factor applied to the raw convolution so that ``int mu C_mu = 1``.
    check_radii : ndarray
        Radii where positivity was verified.
    """

    mu: MuChoice
    func: object = field(repr=False)
    normalization: float
    check_radii: np.ndarray = field(repr=False)
    normalization_check: float = math.nan

    def __call__(self, r):
        return self.func(np.asarray(r, dtype=float))


def _check_positive(values, where):
    lowest = float(np.min(values))
    if lowest < -1e-10:
        raise PositivityViolationError(f"C_mu takes the value {lowest:.3e} at {where}")


def _coherent_cmu(model, mu, B):
    from .landau import form_factor

    meas = spectral_measure(model)
    a = mu.k + mu.ell

    def mu_hat(s):
        # Fourier transform of |phi_{ell,k}|^2 at |q|^2/2B = s
        return form_factor(mu.ell, s) * np.exp(-0.5 * s) * laguerre(a, 0, s)

    gamma2 = meas.integrate(lambda s: mu_hat(s) ** 2, B, extra_rate=2.0)
    if not gamma2 > 0:
        raise PositivityViolationError("decay functional of the chosen state vanishes")
    gamma = math.sqrt(gamma2)

    def raw(r):
        r = np.atleast_1d(r)
        xi = 0.5 * B * r**2
        if model.kind == "delta_limit":
            # white noise: the convolution is alpha^2 |phi|^2 itself
            from .specfun import laguerre_function

            return model.alpha2 * B / (2 * np.pi) * laguerre_function(mu.ell, mu.k, xi) ** 2
        # far out the integral is rounding noise near 1e-15; 1e-10 of int |c~ h| is ample
        return np.array(
            [meas.integrate(lambda s: mu_hat(s) * bessel_j(0, 2 * np.sqrt(s * x)), B, 1.0, rtol=1e-10) for x in xi]
        )

    def func(r):
        scalar = np.ndim(r) == 0
        out = raw(r) / gamma
        return float(out[0]) if scalar else out.reshape(np.shape(r))

    # negative lobes of C can only show within a few tau of the support of |phi|^2
    r_state = math.sqrt((4.0 * (a + mu.ell) + 4.0) / B)
    tau = model.tau if model.tau else 1.0 / math.sqrt(B)
    radii = np.linspace(0.0, 2.0 * r_state + 8.0 * tau, 241)
    _check_positive(func(radii), "sampled radii")
    # independent route: position-space quadrature of |phi|^2 against C_mu
    from .landau import LandauBasis, radial_matrix_element

    basis = LandauBasis(B, mu.ell, 1)
    norm_check = radial_matrix_element(basis, mu.k, mu.k, func, rtol=1e-11) / gamma
    return CMu(mu, func, 1.0 / gamma, radii, norm_check)


def _custom_rule(radii, per_panel=8):
    x, w = np.polynomial.legendre.leggauss(per_panel)
    nodes = []
    wts = []
    for a, b in zip(radii[:-1], radii[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        wts.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(wts)


def _custom_cmu(model, mu):
    radii = np.asarray(mu.radii, dtype=float)
    table = np.asarray(mu.weights, dtype=float)

    def mu0(rho):
        return np.interp(rho, radii, table, right=0.0)

    rho, wr = _custom_rule(radii)
    dens = mu0(rho) * rho * wr

    def conv(r, order):
        th = 2 * np.pi * (np.arange(order) + 0.5) / order
        d = np.sqrt(r[:, None, None] ** 2 + rho[None, :, None] ** 2
                    - 2 * r[:, None, None] * rho[None, :, None] * np.cos(th)[None, None, :])
        return (2 * np.pi / order) * np.einsum("j,ijt->i", dens, evaluate_radial(model, d))

    def raw_chunk(r):
        order = 64
        prev = conv(r, order)
        while order < 4096:
            order *= 2
            cur = conv(r, order)
            if np.max(np.abs(cur - prev)) <= 1e-12 * max(1.0, np.max(np.abs(cur))):
                return cur
            prev = cur
        raise QuadratureError("angular quadrature for C_mu did not converge")

    def raw(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return np.concatenate([raw_chunk(r[i:i + 16]) for i in range(0, r.size, 16)])

    quad_form = 2 * np.pi * np.sum(dens * raw(rho))
    if not quad_form > 0:
        raise PositivityViolationError("mu gives a non-positive quadratic form")
    norm = 1.0 / math.sqrt(quad_form)

    def func(r):
        scalar = np.ndim(r) == 0
        out = norm * raw(r)
        return float(out[0]) if scalar else out.reshape(np.shape(r))

    check = np.linspace(0.0, radii[-1] + 12.0 * model.tau, 121)
    _check_positive(func(check), "sampled radii")
    rho2, wr2 = _custom_rule(radii, per_panel=12)
    norm_check = 2 * np.pi * np.sum(mu0(rho2) * rho2 * wr2 * func(rho2)) * norm
    return CMu(mu, func, norm, check, norm_check)


def c_mu(model, mu, B=1.0):
    """Smoothed covariance C_mu(x) = int mu(d^2y) C(x - y).

    ``mu`` is scaled so that ``int mu C_mu = 1``.  ``B`` is needed for
    the ``coherent_density`` choice.

    Raises
    ------
    PositivityViolationError
        If ``C_mu`` is below ``-1e-10`` at a sampled radius.
    """
    if mu.kind == "point_mass":
        if not model.proper:
            raise UnsupportedOperationError("point mass needs pointwise covariance values")
        w = 1.0 / math.sqrt(model.c0)

        def func(r):
            return w * evaluate_radial(model, r)

        scale = model.tau if model.tau else 1.0
        radii = np.linspace(0.0, 20.0 * scale, 401)
        _check_positive(func(radii), "sampled radii")
        return CMu(mu, func, w, radii, w * w * model.c0)
    if mu.kind == "coherent_density":
        return _coherent_cmu(model, mu, B)
    if not model.proper:
        raise UnsupportedOperationError("tabulated mu needs pointwise covariance values")
    return _custom_cmu(model, mu)
