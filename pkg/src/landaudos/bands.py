"""Band variance and decay energy of a disorder-broadened Landau level.

The decay functional ``gamma^2(phi) = int int |phi(x)|^2 |phi(y)|^2 C(x-y)``
is handled in the truncated angular-momentum basis through the tensor

    A_{jk,j'k'} = int C~(d^2q) <phi_j, e^{iq.x} phi_k> <phi_j', e^{iq.x} phi_k'>^*.

Rotational invariance makes ``A`` vanish unless ``k - j = k' - j'``, so it
is stored as one real symmetric block per diagonal offset ``p``:
``Sigma_p[a, b] = A_{(a, a+p), (b, b+p)}``.  These blocks are also the
covariances of the matrix entries along each diagonal, which the exact
matrix sampler uses.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .covariance import spectral_measure
from .errors import DegenerateBandError, NonConvergenceError, UnsupportedModelError
from .landau import LandauBasis, form_factor, plane_wave_table
from .specfun import legendre

__all__ = [
    "BandStatistics",
    "VariationalState",
    "DecayTensor",
    "sigma2",
    "gamma2_closed_form",
    "decay_tensor",
    "gamma_functional",
    "gamma2_variational",
    "band_statistics",
    "TENSOR_MAX_N",
]

TENSOR_MAX_N = 64


@dataclass(frozen=True)
class BandStatistics:
    """Band variance and decay energy with their provenance.

    ``method`` maps ``"sigma2"`` and ``"gamma2"`` to one of
    ``closed_form``, ``spectral_quadrature`` or ``variational``.
    """

    sigma2: float
    gamma2: float
    method: dict


@dataclass
class VariationalState:
    """Result of the fixed-point maximization of the decay functional.

    Attributes
    ----------
    coefficients : ndarray
        Unit vector over the guiding-center indices ``0..n-1``.
    value : float
        ``gamma^2`` of the returned vector.
    iterations : int
        Iterations used by the best restart.
    converged : bool
    restarts : int
    overlap : float
        ``|c_0|``, the weight on ``phi_{ell,-ell}``.
    history : list of float
        Best value reached by each restart.
    """

    coefficients: np.ndarray
    value: float
    iterations: int
    converged: bool
    restarts: int = 1
    overlap: float = math.nan
    history: list = field(default_factory=list)


def sigma2(model, basis):
    """Band variance ``int C~(d^2k) e^{-s} L_ell(s)^2`` with ``s = |k|^2/2B``.

    Exact for all supported models: Gauss-Laguerre of sufficient order
    for the density kinds, direct evaluation for the atomic ones, and
    ``alpha^2 B / 2 pi`` for the white-noise limit.
    """
    if model.kind == "delta_limit":
        return model.alpha2 * basis.B / (2 * math.pi)
    meas = spectral_measure(model)
    s, w = meas.s_rule(basis.B, 1.0, 2 * basis.ell)
    return float(np.sum(w * form_factor(basis.ell, s) ** 2))


def gamma2_closed_form(model, ell, B):
    """Decay energy of the Gaussian and white-noise models.

    For the Gaussian covariance ``C(0) (b/(b+2))^{ell+1} P_ell(((b+1)^2+1)/((b+1)^2-1))``
    with ``b = B tau^2``; for white noise ``(alpha^2 B/4 pi) (2 ell)!/(ell! 2^ell)^2``;
    for a constant covariance ``C(0)``.
    """
    if model.kind == "gaussian":
        b = B * model.tau**2
        arg = ((b + 1) ** 2 + 1) / ((b + 1) ** 2 - 1)
        return model.c0 * (b / (b + 2)) ** (ell + 1) * legendre(ell, arg)
    if model.kind == "delta_limit":
        log_ratio = math.lgamma(2 * ell + 1) - 2 * math.lgamma(ell + 1) - 2 * ell * math.log(2)
        return model.alpha2 * B / (4 * math.pi) * math.exp(log_ratio)
    if model.kind == "constant":
        return model.c0
    raise UnsupportedModelError(f"no closed form for {model.kind}")


class DecayTensor:
    """Quadrature representation of the tensor A for one (model, basis).

    Parameters
    ----------
    model : CovarianceModel
    basis : LandauBasis

    Attributes
    ----------
    nodes, weights : ndarray
        Spectral rule in ``s``; exact for every entry of ``A``.
    table : ndarray, shape (N, n, n)
        Radial plane-wave integrals at the nodes.
    """

    def __init__(self, model, basis):
        self.model = model
        self.basis = basis
        n = basis.n
        meas = spectral_measure(model)
        self.nodes, self.weights = meas.s_rule(basis.B, 2.0, 2 * basis.ell + 2 * n - 2)
        self.table = plane_wave_table(basis, self.nodes)
        self.table.setflags(write=False)
        j, k = np.indices((n, n))
        self._pidx = k - j + n - 1
        rows = np.arange(n * n)
        self._diag_sum = sparse.csr_matrix(
            (np.ones(n * n), (rows, self._pidx.ravel())), shape=(n * n, 2 * n - 1)
        )
        self._blocks = None

    @property
    def n(self):
        return self.basis.n

    def blocks(self):
        """Covariance blocks ``Sigma_p`` for ``p = 0..n-1`` (list of arrays)."""
        if self._blocks is None:
            out = []
            for p in range(self.n):
                a = np.arange(self.n - p)
                m = self.table[:, a, a + p]
                out.append((m.T * self.weights) @ m)
            self._blocks = out
        return self._blocks

    def dense(self):
        """Materialize A as an ``(n^2, n^2)`` array indexed by ``j*n + k``."""
        n = self.n
        out = np.zeros((n * n, n * n))
        for p, blk in enumerate(self.blocks()):
            a = np.arange(n - p)
            up = a * n + a + p
            out[np.ix_(up, up)] = blk
            if p:
                # offsets p and -p do not couple; the -p block equals Sigma_p
                low = (a + p) * n + a
                out[np.ix_(low, low)] = blk
        return out

    def _diagonal_sums(self, c):
        x = np.conj(c)[:, None] * c[None, :]
        y = (self.table * x[None]).reshape(len(self.nodes), -1)
        return np.asarray(self._diag_sum.T @ y.T).T

    def functional(self, c, path="auto"):
        """gamma^2 of the state with coefficient vector ``c``."""
        c = np.asarray(c, dtype=complex)
        if path == "auto":
            path = "blocks" if self.n <= TENSOR_MAX_N else "stream"
        if path == "blocks":
            total = 0.0
            for p, blk in enumerate(self.blocks()):
                x = np.conj(c[: self.n - p]) * c[p:]
                q = float(np.real(np.vdot(x, blk @ x)))
                total += q if p == 0 else 2.0 * q
            return total
        h = self._diagonal_sums(c)
        return float(np.sum(self.weights[:, None] * np.abs(h) ** 2))

    def matrix(self, c, path="auto"):
        """Hermitian matrix ``B(c)_{jk} = sum A_{jk,j'k'} c_j' c_k'^*``."""
        c = np.asarray(c, dtype=complex)
        n = self.n
        if path == "auto":
            path = "blocks" if n <= TENSOR_MAX_N else "stream"
        if path == "blocks":
            out = np.zeros((n, n), dtype=complex)
            for p, blk in enumerate(self.blocks()):
                a = np.arange(n - p)
                x = c[: n - p] * np.conj(c[p:])
                v = blk @ x
                out[a, a + p] = v
                if p:
                    out[a + p, a] = np.conj(v)
            return out
        h = self._diagonal_sums(c)
        return np.einsum("t,tjk,tjk->jk", self.weights, self.table, np.conj(h)[:, self._pidx])


@functools.lru_cache(maxsize=16)
def decay_tensor(model, basis):
    """Cached :class:`DecayTensor`; read-only once built."""
    return DecayTensor(model, basis)


def gamma_functional(model, basis, coefficients):
    """Quartic decay functional of a unit coefficient vector."""
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (basis.n,):
        raise ValueError("coefficient vector must have length n")
    return decay_tensor(model, basis).functional(c)


def _needs_shift(model):
    # B(c) is the compression of C * |phi|^2, positive semidefinite when C >= 0
    return model.kind in ("bessel_oscillating", "poly_gaussian")


def gamma2_variational(model, basis, restarts=8, tol=1e-10, max_iter=10_000, seed=0, path="auto"):
    """Maximize the decay functional over unit vectors by fixed-point iteration.

    Each step is ``c <- normalize((B(c) + shift) c)``.  The shift is
    ``C(0)`` for covariances that take negative values (it makes the
    iteration matrix positive semidefinite) and zero otherwise; with a
    positive semidefinite iteration matrix the value cannot decrease.

    Restarts use seeded random complex vectors with an envelope
    ``exp(-8 a / n)`` over the guiding-center index ``a``, i.e. states in
    the interior of the truncation disk.  States spread to the disk edge
    lose weight to the truncation and relax toward the interior only very
    slowly, because magnetic translations of a maximizer are maximizers
    too.  The best restart is returned.

    Raises
    ------
    NonConvergenceError
        If no restart converges within ``max_iter`` iterations.
    """
    n = basis.n
    if sigma2(model, basis) == 0.0:
        c = np.zeros(n, dtype=complex)
        c[0] = 1.0
        return VariationalState(c, 0.0, 0, True, 0, 1.0, [])
    tensor = decay_tensor(model, basis)
    shift = model.c0 if _needs_shift(model) else 0.0
    rng = np.random.default_rng(seed)
    envelope = np.exp(-8.0 * np.arange(n) / n)
    best = None
    history = []
    for _ in range(restarts):
        c = (rng.normal(size=n) + 1j * rng.normal(size=n)) * envelope
        c /= np.linalg.norm(c)
        value = tensor.functional(c, path)
        converged = False
        it = 0
        while it < max_iter:
            it += 1
            nxt = tensor.matrix(c, path) @ c + shift * c
            nxt /= np.linalg.norm(nxt)
            new_value = tensor.functional(nxt, path)
            if new_value < value - 1e-12 * (abs(value) + shift):
                raise AssertionError("fixed-point iteration decreased the functional")
            done = abs(new_value - value) <= tol * abs(new_value)
            c, value = nxt, new_value
            if done:
                converged = True
                break
        history.append(value)
        if converged and (best is None or value > best.value):
            best = VariationalState(c, value, it, True)
    if best is None:
        raise NonConvergenceError(f"no restart converged within {max_iter} iterations")
    best.restarts = restarts
    best.overlap = float(abs(best.coefficients[0]))
    best.history = history
    return best


def band_statistics(model, basis, variational_n=32, **kwargs):
    """Band variance and decay energy, closed form when available."""
    s2 = sigma2(model, basis)
    method = {"sigma2": "closed_form" if model.kind == "delta_limit" else "spectral_quadrature"}
    if s2 == 0.0:
        return BandStatistics(0.0, 0.0, dict(method, gamma2="closed_form"))
    try:
        g2 = gamma2_closed_form(model, basis.ell, basis.B)
        method["gamma2"] = "closed_form"
    except UnsupportedModelError:
        small = LandauBasis(basis.B, basis.ell, variational_n)
        g2 = gamma2_variational(model, small, **kwargs).value
        method["gamma2"] = "variational"
    return BandStatistics(s2, g2, method)


def raise_if_degenerate(model, basis):
    """Raise :class:`DegenerateBandError` when the band variance vanishes."""
    s2 = sigma2(model, basis)
    if s2 == 0.0:
        raise DegenerateBandError(
            f"band variance vanishes for level {basis.ell}; the density of states is a point mass"
        )
    return s2
