"""Upper bounds on the restricted density of states and exact references.

All bound curves have the shape ``prefactor * exp(-E^2 / (2 * decay))``
with ``decay = inf`` for the energy-independent kinds.  The prefactors
come from diagonal matrix elements of the smoothed covariance ``C_mu``,
which for a radial ``C_mu`` are computed in Fourier space:

    <phi_{ell,k}, C_mu phi_{ell,k}> = int ds c~_s(s) mu^(s) F_ell(s) e^{-s/2} L_a(s)

with ``a = k + ell`` and ``mu^`` the (normalized) Fourier transform of mu.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .bands import gamma2_closed_form, sigma2
from .covariance import c_mu, spectral_measure
from .errors import (
    DomainError,
    NoCertifiedSupError,
    PositivityViolationError,
    QuadratureError,
    UnsupportedModelError,
)
from .landau import LandauBasis, form_factor
from .specfun import bessel_j, dawson, laguerre

__all__ = [
    "BoundCurve",
    "ReferenceDensity",
    "BOUND_KINDS",
    "mu_transform",
    "cmu_diagonal",
    "operator_norm_cmu",
    "coherent_expectation",
    "bound_wegner_flat",
    "bound_gaussian_cmu",
    "bound_gaussian_sigma",
    "bound_gaussian_boehm",
    "bound_gaussian_gamma",
    "reference_wegner",
    "reference_semielliptic",
    "WEGNER_ASYMPTOTIC_ETA",
]

BOUND_KINDS = ("wegner_flat", "gaussian_cmu", "gaussian_sigma", "gaussian_boehm", "gaussian_gamma")
WEGNER_ASYMPTOTIC_ETA = 8.0

_CHUNK = 64
_DECAY_RUN = 16


@dataclass(frozen=True)
class BoundCurve:
    """Energy-dependent upper bound ``prefactor * exp(-E^2 / 2 decay)``.

    Attributes
    ----------
    kind : str
    prefactor : float
        Value at ``E = 0`` (inverse energy).
    decay : float
        Variance of the Gaussian shape, ``C(0)``; ``inf`` for flat bounds.
    metadata : dict
        Constants entering the prefactor.
    """

    kind: str
    prefactor: float
    decay: float = math.inf
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.prefactor >= 0:
            raise DomainError("bound prefactor must be non-negative")

    def __call__(self, E):
        E = np.asarray(E, dtype=float)
        if math.isinf(self.decay):
            out = np.full(E.shape, self.prefactor)
        else:
            out = self.prefactor * np.exp(-0.5 * E**2 / self.decay)
        return float(out) if out.ndim == 0 else out

    evaluate = __call__


def mu_transform(model, mu, B, cmu=None):
    """Normalized Fourier transform of mu as a function of ``s = |k|^2/2B``.

    The normalization is that of :func:`covariance.c_mu`, so
    ``int mu C_mu = 1``.  Returns ``(func, extra_rate, degree)``: the
    function decays like ``e^{-extra_rate s}`` times a polynomial of the
    given degree, or ``degree`` is None when it is not of that form.
    """
    if cmu is None:
        cmu = c_mu(model, mu, B)
    if mu.kind == "point_mass":
        w = cmu.normalization
        return (lambda s: np.full(np.shape(s), w)), 0.0, 0
    if mu.kind == "coherent_density":
        a = mu.k + mu.ell
        g = cmu.normalization

        def func(s):
            return g * form_factor(mu.ell, s) * np.exp(-0.5 * s) * laguerre(a, 0, s)

        return func, 1.0, mu.ell + a
    radii = np.asarray(mu.radii, dtype=float)
    table = np.asarray(mu.weights, dtype=float)
    x, w = np.polynomial.legendre.leggauss(12)
    rho = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(radii[:-1], radii[1:])])
    wr = np.concatenate([0.5 * (b - a) * w for a, b in zip(radii[:-1], radii[1:])])
    dens = 2 * np.pi * cmu.normalization * np.interp(rho, radii, table) * rho * wr

    def func(s):
        s = np.asarray(s, dtype=float)
        k = np.sqrt(2.0 * B * s)
        return bessel_j(0, k[..., None] * rho) @ dens

    return func, 0.0, None


def _gc_diagonal(s, a_hi):
    """``e^{-s/2} L_a(s)`` for ``a = 0..a_hi-1``, shape (a_hi, len(s))."""
    out = np.empty((a_hi, s.size))
    g = np.exp(-0.5 * s)
    gprev = np.zeros_like(s)
    for a in range(a_hi):
        out[a] = g
        g, gprev = ((2 * a + 1 - s) * g - a * gprev) / (a + 1), g
    return out


def cmu_diagonal(model, mu, B, ell, a_hi, cmu=None, rtol=1e-12):
    """Diagonal elements ``<phi_{ell,a-ell}, C_mu phi_{ell,a-ell}>`` for ``a < a_hi``."""
    meas = spectral_measure(model)
    m, extra, degree = mu_transform(model, mu, B, cmu)
    if meas.kind in ("point", "circle"):
        s = np.array([meas.s_atom(B)])
        vals = meas.mass * m(s) * form_factor(ell, s) * _gc_diagonal(s, a_hi)
        return vals[:, 0]

    def on_rule(deg):
        s, w = meas.s_rule(B, 1.0 + extra, deg)
        terms = _gc_diagonal(s, a_hi) * (w * m(s) * form_factor(ell, s))
        return terms.sum(axis=1), np.abs(terms).sum(axis=1)

    if degree is not None:
        return on_rule(degree + ell + a_hi)[0]
    deg = max(64, 2 * a_hi)
    prev, _ = on_rule(deg)
    while deg <= 8192:
        deg *= 2
        cur, scale = on_rule(deg)
        if np.all(np.abs(cur - prev) <= rtol * scale + 1e-300):
            return cur
        prev = cur
    raise QuadratureError("diagonal elements of C_mu did not converge")


def coherent_expectation(model, mu, B, ell, cmu=None):
    """``<psi_{ell,0}, C_mu psi_{ell,0}>``; note ``psi_{ell,0} = phi_{ell,0}``."""
    return float(cmu_diagonal(model, mu, B, ell, ell + 1, cmu)[ell])


def operator_norm_cmu(model, mu, B, ell, k_max=None, hard_cap=4096, cmu=None, return_details=False):
    """Norm of ``P_ell C_mu P_ell`` for radial ``C_mu``.

    The operator is diagonal in the angular-momentum basis, so the norm
    is the supremum of the diagonal.  The diagonal is extended in chunks
    until it is non-increasing over the last 16 entries after the running
    maximum, and at least up to momentum ``k_max``.

    Raises
    ------
    NoCertifiedSupError
        If no decaying tail is seen below momentum ``hard_cap``.
    """
    a_cap = hard_cap + ell + 1
    a_need = 0 if k_max is None else k_max + ell + 1
    if a_need > a_cap:
        raise DomainError("k_max exceeds hard_cap")
    a_hi = min(max(_CHUNK, a_need), a_cap)
    while True:
        diag = cmu_diagonal(model, mu, B, ell, a_hi, cmu)
        top = int(np.argmax(diag))
        tail = diag[top:]
        slack = 1e-13 * abs(diag[top])
        if tail.size > _DECAY_RUN and np.all(np.diff(tail[-_DECAY_RUN - 1 :]) <= slack):
            break
        if a_hi >= a_cap:
            raise NoCertifiedSupError(f"no monotone tail of the C_mu diagonal below k={hard_cap}")
        a_hi = min(2 * a_hi, a_cap)
    value = float(diag[top])
    if return_details:
        return value, {"argmax_k": top - ell, "k_max": a_hi - ell - 1, "diagonal": diag}
    return value


def _gaussian_decay(model):
    return model.variance


def _positive_cmu(model, mu, B):
    cmu = c_mu(model, mu, B)
    if abs(cmu.normalization_check - 1.0) > 1e-8:
        raise PositivityViolationError(
            f"normalization of mu is off by {cmu.normalization_check - 1.0:.2e}"
        )
    return cmu


def bound_wegner_flat(model, mu, B, ell, **kwargs):
    """Energy-independent bound ``1 / (sqrt(2 pi) ||P C_mu P||)``."""
    cmu = _positive_cmu(model, mu, B)
    norm, details = operator_norm_cmu(model, mu, B, ell, cmu=cmu, return_details=True, **kwargs)
    return BoundCurve(
        "wegner_flat",
        1.0 / (math.sqrt(2 * math.pi) * norm),
        math.inf,
        {"operator_norm": norm, "argmax_k": details["argmax_k"], "mu": mu.kind},
    )


def bound_gaussian_cmu(model, mu, B, ell):
    """Gaussian bound ``exp(-E^2/2C(0)) / (sqrt(2 pi) <psi, C_mu psi>)``."""
    cmu = _positive_cmu(model, mu, B)
    expect = coherent_expectation(model, mu, B, ell, cmu)
    if not expect > 0:
        raise PositivityViolationError("<psi, C_mu psi> must be positive")
    return BoundCurve(
        "gaussian_cmu",
        1.0 / (math.sqrt(2 * math.pi) * expect),
        _gaussian_decay(model),
        {"psi_cmu_psi": expect, "c0": model.variance, "mu": mu.kind},
    )


def bound_gaussian_sigma(model, B, ell):
    """Gaussian bound with prefactor ``(C(0)/sigma^2) / sqrt(2 pi C(0))``.

    Raises
    ------
    DegenerateBandError
        If the band variance vanishes.
    UnsupportedModelError
        For white noise, where ``C(0)`` is infinite.
    """
    from .bands import raise_if_degenerate

    if not model.proper:
        raise UnsupportedModelError("the sigma bound needs a finite C(0)")
    s2 = raise_if_degenerate(model, LandauBasis(B, ell, 1))
    c0 = model.c0
    return BoundCurve(
        "gaussian_sigma",
        (c0 / s2) / math.sqrt(2 * math.pi * c0),
        c0,
        {"sigma2": s2, "c0": c0},
    )


def bound_gaussian_boehm(model, B, ell=0):
    """Closed form of the Gaussian bound for Gaussian covariance at ``ell = 0``."""
    if model.kind != "gaussian" or ell != 0:
        raise UnsupportedModelError("closed form only for the Gaussian covariance at ell = 0")
    b = B * model.tau**2
    c0 = model.c0
    return BoundCurve(
        "gaussian_boehm",
        math.sqrt((b + 2) / b) / math.sqrt(2 * math.pi * c0),
        c0,
        {"btau2": b, "c0": c0},
    )


def bound_gaussian_gamma(model, B, ell, gamma2=None):
    """Optimized flat bound ``1 / sqrt(2 pi Gamma^2)`` for non-negative covariances.

    ``gamma2`` defaults to the closed form where one exists.
    """
    if model.kind in ("bessel_oscillating", "poly_gaussian"):
        raise UnsupportedModelError(f"{model.kind} covariance takes negative values")
    if gamma2 is None:
        gamma2 = gamma2_closed_form(model, ell, B)
    if not gamma2 > 0:
        raise PositivityViolationError("decay energy must be positive")
    return BoundCurve("gaussian_gamma", 1.0 / math.sqrt(2 * math.pi * gamma2), math.inf, {"gamma2": gamma2})


@dataclass(frozen=True)
class ReferenceDensity:
    """Exact limiting density with scale ``sigma0``.

    ``kind`` is ``wegner_exact_l0`` or ``semi_elliptic``.
    """

    kind: str
    sigma0: float

    def __post_init__(self):
        if self.kind not in ("wegner_exact_l0", "semi_elliptic"):
            raise DomainError(f"unknown reference density {self.kind!r}")
        if not self.sigma0 > 0:
            raise DomainError("sigma0 must be positive")

    def pdf(self, E):
        if self.kind == "wegner_exact_l0":
            return reference_wegner(self.sigma0, E)
        return reference_semielliptic(self.sigma0, E)

    def cdf(self, E):
        eta = np.asarray(E, dtype=float) / self.sigma0
        if self.kind == "semi_elliptic":
            x = np.clip(eta / 2.0, -1.0, 1.0)
            out = 0.5 + (x * np.sqrt(1 - x * x) + np.arcsin(x)) / np.pi
        else:
            # CDF = 1/2 + arctan(erfi(eta))/pi with erfi = (2/sqrt(pi)) e^{eta^2} F(eta)
            a = np.abs(eta)
            f = dawson(a)
            with np.errstate(over="ignore", divide="ignore"):
                inv = np.where(a > 0, 0.5 * math.sqrt(math.pi) * np.exp(-a * a) / np.where(a > 0, f, 1.0), np.inf)
            half = np.where(a > 0, 0.5 - np.arctan(inv) / np.pi, 0.0)
            out = 0.5 + np.sign(eta) * half
        return float(out) if np.ndim(out) == 0 else out

    def flagged(self, E):
        """True where the Wegner density is in its asymptotic regime."""
        eta = np.abs(np.asarray(E, dtype=float)) / self.sigma0
        return (eta > WEGNER_ASYMPTOTIC_ETA) & (self.kind == "wegner_exact_l0")


def reference_wegner(sigma0, E, return_flag=False):
    """Exact lowest-level density for white noise.

    Evaluated as ``(2/(pi^{3/2} sigma0)) e^{-eta^2} / (e^{-2 eta^2} + (4/pi) F(eta)^2)``
    with the Dawson function F, which cannot overflow.  With
    ``return_flag`` a boolean marks ``|eta| > 8``, where the value is
    governed by the asymptotic branch.
    """
    if not sigma0 > 0:
        raise DomainError("sigma0 must be positive")
    eta = np.asarray(E, dtype=float) / sigma0
    f = dawson(eta)
    e = np.exp(-eta * eta)
    val = (2.0 / (math.pi**1.5 * sigma0)) * e / (e * e + (4.0 / math.pi) * f * f)
    if np.ndim(val) == 0:
        val = float(val)
    if return_flag:
        return val, np.abs(eta) > WEGNER_ASYMPTOTIC_ETA
    return val


def reference_semielliptic(sigma0, E):
    """Semicircle density ``sqrt(4 - eta^2) / (2 pi sigma0)`` on ``|eta| <= 2``."""
    if not sigma0 > 0:
        raise DomainError("sigma0 must be positive")
    eta = np.asarray(E, dtype=float) / sigma0
    val = np.sqrt(np.clip(4.0 - eta * eta, 0.0, None)) / (2 * math.pi * sigma0)
    return float(val) if val.ndim == 0 else val


def band_sigma0(model, B, ell=0):
    """Band width ``sigma_ell``, the scale of the reference densities."""
    return math.sqrt(sigma2(model, LandauBasis(B, ell, 1)))
