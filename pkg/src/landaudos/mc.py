"""Monte Carlo sampling of the truncated random matrix and its eigenvalue density.

Two samplers produce ``V_{jk} = <phi_{ell,j}, V phi_{ell,k}>`` on the
first ``n`` angular-momentum states:

``spectral_field``
    A randomized spectral field ``V(x) = sum_m A_m cos(q_m.x + theta_m)``
    with ``M`` modes, projected exactly through the plane-wave kernel.
    Wavevectors are drawn by importance sampling from a density close to
    ``c~_s F_ell(s)^2`` (the weight with which a mode enters the matrix);
    the amplitudes carry the likelihood ratio, so the covariance of the
    field is exactly ``C`` for every proposal.  ``proposal="spectral"``
    draws from ``C~ / C(0)`` instead.
``exact_matrix``
    Exact Gaussian sampling from the entry covariances ``Sigma_p`` of the
    decay tensor, one block per diagonal offset ``p``.

Random numbers come from a counter-based generator keyed by
``(seed, realization_index, stream)``, so every realization is
reproducible independently of scheduling.
"""

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bands import TENSOR_MAX_N, decay_tensor, sigma2
from .covariance import CovarianceModel, spectral_measure
from .errors import DomainError, EigensolverError, FactorizationError, UnsupportedModelError
from .landau import LandauBasis, form_factor, plane_wave_table

__all__ = [
    "MatrixEnsembleSpec",
    "MatrixSample",
    "DosHistogram",
    "SAMPLERS",
    "generator",
    "sample_field_matrix",
    "sample_exact_matrix",
    "sample_matrix",
    "eigenvalues",
    "accumulate_dos",
    "ks_distance",
    "ks_distance_samples",
    "expected_second_moment",
    "effective_model",
]

SAMPLERS = ("spectral_field", "exact_matrix")
PROPOSALS = ("form_factor", "spectral")
MIN_MODES = 256

_STREAM_MODES = 0
_STREAM_EXACT = 1


@dataclass(frozen=True)
class MatrixEnsembleSpec:
    """Ensemble of truncated random matrices.

    Attributes
    ----------
    basis : LandauBasis
    model : CovarianceModel
    sampler : str
        ``spectral_field`` or ``exact_matrix``.
    realizations : int
    seed : int
        Unsigned 64-bit seed.
    modes : int
        Number of plane-wave modes of the spectral field (at least 256).
    proposal : str
        Wavevector proposal of the spectral field, ``form_factor`` or
        ``spectral``.
    surrogate_btau2 : float
        ``B tau^2`` of the Gaussian surrogate used for white noise by the
        spectral field.
    """

    basis: LandauBasis
    model: CovarianceModel
    sampler: str = "spectral_field"
    realizations: int = 100
    seed: int = 0
    modes: int = 4096
    proposal: str = "form_factor"
    surrogate_btau2: float = 1e-2

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise DomainError(f"unknown sampler {self.sampler!r}")
        if self.proposal not in PROPOSALS:
            raise DomainError(f"unknown proposal {self.proposal!r}")
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise DomainError("realizations must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.sampler == "exact_matrix" and self.basis.n > TENSOR_MAX_N:
            raise DomainError(f"exact_matrix needs n <= {TENSOR_MAX_N}")
        if self.sampler == "spectral_field" and self.modes < MIN_MODES:
            raise DomainError(f"spectral_field needs at least {MIN_MODES} modes")


@dataclass
class MatrixSample:
    """One realization of the truncated matrix."""

    entries: np.ndarray
    realization_index: int
    sampler_tag: str


@dataclass
class DosHistogram:
    """Binned eigenvalue density of the truncated matrix ensemble.

    Every eigenvalue carries weight ``1/n``.  ``density`` is normalized by
    the number of eigenvalues (including overflow) and the bin width, so
    ``sum(density * width) = 1 - overflow_fraction``.

    Attributes
    ----------
    bin_edges : ndarray, shape (bins + 1,)
    counts : ndarray of int
        Eigenvalue tallies per bin, all realizations.
    density, stderr : ndarray
        Density estimate per bin and its standard error from the spread
        between realizations.
    realizations, n : int
    total_weight : float
        Total weight inside the window.
    overflow_low, overflow_high : int
        Eigenvalues below and above the window.
    moments : ndarray, shape (R, 2)
        Per-realization ``(1/n) tr V`` and ``(1/n) tr V^2`` (exact, not binned).
    eigenvalues : ndarray or None
        Shape ``(R, n)`` when retained.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    realizations: int
    n: int
    total_weight: float
    overflow_low: int
    overflow_high: int
    moments: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(default=None, repr=False)

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self):
        return np.diff(self.bin_edges)

    @property
    def overflow_fraction(self):
        return (self.overflow_low + self.overflow_high) / (self.n * self.realizations)

    @property
    def mass(self):
        return float(np.sum(self.density * self.widths))

    def mean(self):
        """Ensemble mean of ``(1/n) tr V`` and its standard error."""
        m = self.moments[:, 0]
        return float(m.mean()), float(m.std(ddof=1) / math.sqrt(m.size))

    def second_moment(self):
        """Ensemble mean of ``(1/n) tr V^2`` and its standard error."""
        m = self.moments[:, 1]
        return float(m.mean()), float(m.std(ddof=1) / math.sqrt(m.size))

    def binned_moments(self):
        """First and second moments of the binned density (window only)."""
        c = self.centers
        w = self.density * self.widths
        return float(np.sum(w * c)), float(np.sum(w * c * c))

    def cdf_at_edges(self):
        """Empirical distribution function at the bin edges."""
        total = self.n * self.realizations
        cum = np.concatenate([[0], np.cumsum(self.counts)])
        return (self.overflow_low + cum) / total


def generator(seed, realization_index, stream):
    """Counter-based generator for one (seed, realization, stream) triple."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(realization_index), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def effective_model(spec):
    """Covariance actually sampled: white noise becomes its Gaussian surrogate."""
    if spec.model.kind == "delta_limit" and spec.sampler == "spectral_field":
        return CovarianceModel.gaussian_surrogate(spec.model, spec.basis.B, spec.surrogate_btau2)
    return spec.model


class _Proposal:
    """Mixture proposal in ``s`` for the spectral field.

    A piecewise-constant table of ``c~_s F_ell^2`` on a uniform grid
    (weight 0.9) plus an exponential with half the decay rate of the
    target (weight 0.1), which keeps the likelihood ratio bounded.
    """

    cells = 4096
    table_weight = 0.9

    def __init__(self, model, B, ell):
        meas = spectral_measure(model)
        self.meas = meas
        self.B = B
        self.ell = ell
        rate = meas.s_rate(B) + 1.0
        degree = 2 * ell + (2 if model.kind == "poly_gaussian" else 0)
        self.s_max = (40.0 + 4.0 * degree) / rate
        self.tail_rate = 0.5 * rate
        edges = np.linspace(0.0, self.s_max, self.cells + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        vals = self.target(mid)
        self.h = edges[1] - edges[0]
        self.cell_density = vals / (vals.sum() * self.h)
        self.cell_cdf = np.cumsum(vals) / vals.sum()
        self.edges = edges

    def target(self, s):
        return self.meas.s_density(s, self.B) * form_factor(self.ell, s) ** 2

    def density(self, s):
        idx = np.minimum((s / self.h).astype(np.int64), self.cells - 1)
        table = np.where(s < self.s_max, self.cell_density[idx], 0.0)
        tail = self.tail_rate * np.exp(-self.tail_rate * s)
        return self.table_weight * table + (1.0 - self.table_weight) * tail

    def sample(self, rng, size):
        pick = rng.random(size) < self.table_weight
        u = rng.random(size)
        cell = np.minimum(np.searchsorted(self.cell_cdf, rng.random(size), side="right"), self.cells - 1)
        table_s = self.edges[cell] + u * self.h
        tail_s = rng.exponential(1.0 / self.tail_rate, size)
        return np.where(pick, table_s, tail_s)


@functools.lru_cache(maxsize=32)
def _proposal(model, B, ell):
    return _Proposal(model, B, ell)


def _literal_s(model, B, rng, size):
    """Draw ``s`` from the normalized spectral measure ``C~ / C(0)``."""
    b = B * model.tau**2
    if model.kind == "gaussian":
        return rng.exponential(1.0 / b, size)
    # density proportional to e^{-v} (3 + 3v + v^2) / 8 with v = b s: Gamma mixture
    shape = rng.choice(np.array([1.0, 2.0, 3.0]), size=size, p=[3 / 8, 3 / 8, 2 / 8])
    return rng.gamma(shape) / b


def _modes(spec, rng):
    """Mode arrays ``(s, psi, u, v)`` for :func:`kernels.field_matrix`."""
    model = effective_model(spec)
    B, ell, M = spec.basis.B, spec.basis.ell, spec.modes
    meas = spectral_measure(model)
    if meas.kind in ("point", "circle"):
        s = np.full(M, meas.s_atom(B))
        amp = math.sqrt(2.0 * model.c0 / M) * form_factor(ell, s)
    elif spec.proposal == "spectral":
        s = _literal_s(model, B, rng, M)
        amp = math.sqrt(2.0 * model.c0 / M) * form_factor(ell, s)
    else:
        prop = _proposal(model, B, ell)
        s = prop.sample(rng, M)
        f = form_factor(ell, s)
        ratio = meas.s_density(s, B) * f * f / prop.density(s)
        amp = np.sqrt(2.0 * ratio / M) * np.sign(f)
    direction = rng.uniform(0.0, 2 * np.pi, M)
    phase = rng.uniform(0.0, 2 * np.pi, M)
    psi = direction + 0.5 * np.pi
    return s, psi, amp * np.cos(phase), amp * np.sin(phase)


def sample_field_matrix(spec, realization_index):
    """Truncated matrix of a randomized spectral field realization."""
    if spec.sampler != "spectral_field":
        raise DomainError("ensemble does not select the spectral_field sampler")
    if spec.model.kind == "delta_limit" and not spec.surrogate_btau2 > 0:
        raise UnsupportedModelError("white noise needs a positive surrogate B tau^2")
    rng = generator(spec.seed, realization_index, _STREAM_MODES)
    s, psi, u, v = _modes(spec, rng)
    mat = kernels.field_matrix(s, psi, u, v, spec.basis.n)
    return MatrixSample(mat, realization_index, "spectral_field")


@functools.lru_cache(maxsize=16)
def _exact_factors(model, basis):
    """Square-root factors of the entry covariance blocks."""
    out = []
    for p, blk in enumerate(decay_tensor(model, basis).blocks()):
        sym = 0.5 * (blk + blk.T)
        lam, vec = np.linalg.eigh(sym)
        trace = float(np.trace(sym))
        if lam.size and lam[0] < -1e-8 * max(trace, 0.0) - 1e-300:
            raise FactorizationError(f"covariance block p={p} is indefinite (eigenvalue {lam[0]:.3e})")
        out.append(vec * np.sqrt(np.clip(lam, 0.0, None)))
    return out


def sample_exact_matrix(spec, realization_index):
    """Exactly Gaussian truncated matrix from the entry covariances.

    Diagonal ``p = 0`` is real ``N(0, Sigma_0)``; each diagonal ``p > 0``
    is circular complex ``CN(0, Sigma_p)`` and independent of the others;
    the lower triangle is the Hermitian conjugate.
    """
    if spec.sampler != "exact_matrix":
        raise DomainError("ensemble does not select the exact_matrix sampler")
    n = spec.basis.n
    if n > TENSOR_MAX_N:
        raise DomainError(f"exact_matrix needs n <= {TENSOR_MAX_N}")
    factors = _exact_factors(spec.model, spec.basis)
    rng = generator(spec.seed, realization_index, _STREAM_EXACT)
    mat = np.zeros((n, n), dtype=complex)
    a = np.arange(n)
    mat[a, a] = factors[0] @ rng.standard_normal(n)
    for p in range(1, n):
        m = n - p
        z = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / math.sqrt(2.0)
        x = factors[p] @ z
        mat[a[:m], a[:m] + p] = x
        mat[a[:m] + p, a[:m]] = np.conj(x)
    return MatrixSample(mat, realization_index, "exact_matrix")


def sample_matrix(spec, realization_index):
    """Dispatch to the sampler selected by ``spec``."""
    if spec.sampler == "exact_matrix":
        return sample_exact_matrix(spec, realization_index)
    return sample_field_matrix(spec, realization_index)


def eigenvalues(sample):
    """Ascending eigenvalues of a Hermitian sample."""
    try:
        return np.linalg.eigvalsh(sample.entries)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc), sample.realization_index) from exc


def _realization_stats(spec, indices, edges, keep):
    bins = edges.size - 1
    out = []
    for idx in indices:
        lam = eigenvalues(sample_matrix(spec, idx))
        # side='left' puts a value equal to an edge into the lower bin
        pos = np.searchsorted(edges, lam, side="left") - 1
        low = int(np.sum(pos < 0))
        high = int(np.sum(pos >= bins))
        inside = pos[(pos >= 0) & (pos < bins)]
        # the left end of the window belongs to the first bin
        at_left = int(np.sum(lam == edges[0]))
        counts = np.bincount(inside, minlength=bins)
        counts[0] += at_left
        low -= at_left
        out.append((idx, counts, low, high, lam.mean(), np.mean(lam * lam), lam if keep else None))
    return out


def accumulate_dos(spec, energy_window=None, bins=201, workers=1, keep_eigenvalues=False):
    """Eigenvalue histogram of ``spec.realizations`` independent realizations.

    Parameters
    ----------
    energy_window : (float, float), optional
        Histogram range; defaults to ``+-5 sigma_ell``.
    bins : int
        Number of uniform bins, at least 10.
    workers : int
        Worker processes.  Per-realization tallies are merged in index
        order, so the result does not depend on ``workers``.
    keep_eigenvalues : bool
        Retain all eigenvalues in the result.
    """
    R = spec.realizations
    if R < 2:
        raise DomainError("need at least two realizations")
    if bins < 10:
        raise DomainError("need at least ten bins")
    if energy_window is None:
        sigma = math.sqrt(sigma2(spec.model, spec.basis))
        if sigma == 0.0:
            sigma = 1.0
        energy_window = (-5.0 * sigma, 5.0 * sigma)
    lo, hi = map(float, energy_window)
    if not hi > lo:
        raise DomainError("empty energy window")
    edges = np.linspace(lo, hi, bins + 1)
    indices = list(range(R))
    if workers <= 1:
        results = _realization_stats(spec, indices, edges, keep_eigenvalues)
    else:
        chunks = [indices[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_realization_stats, [spec] * workers, chunks, [edges] * workers,
                             [keep_eigenvalues] * workers)
            results = sorted((r for part in parts for r in part), key=lambda r: r[0])
    n = spec.basis.n
    per = np.array([r[1] for r in results])
    counts = per.sum(axis=0)
    widths = np.diff(edges)
    total = n * R
    density = counts / (total * widths)
    per_density = per / (n * widths)
    stderr = per_density.std(axis=0, ddof=1) / math.sqrt(R)
    moments = np.array([[r[4], r[5]] for r in results])
    eig = np.array([r[6] for r in results]) if keep_eigenvalues else None
    return DosHistogram(
        bin_edges=edges,
        counts=counts,
        density=density,
        stderr=stderr,
        realizations=R,
        n=n,
        total_weight=float(counts.sum() / total),
        overflow_low=int(sum(r[2] for r in results)),
        overflow_high=int(sum(r[3] for r in results)),
        moments=moments,
        eigenvalues=eig,
    )


def ks_distance(hist, cdf):
    """Kolmogorov-Smirnov distance at the bin edges to a reference CDF."""
    return float(np.max(np.abs(hist.cdf_at_edges() - cdf(hist.bin_edges))))


def ks_distance_samples(values, cdf):
    """Exact Kolmogorov-Smirnov distance of a sample to a reference CDF."""
    x = np.sort(np.ravel(values))
    m = x.size
    f = cdf(x)
    upper = np.arange(1, m + 1) / m - f
    lower = f - np.arange(m) / m
    return float(max(upper.max(), lower.max()))


def expected_second_moment(model, basis, chunk=32):
    """Exact ``E[(1/n) tr V^2]`` of the truncated matrix.

    Equals ``(1/n) sum_{jk} int C~ |<phi_j, e^{iq.x} phi_k>|^2``; below
    ``sigma_ell^2`` by the weight lost to states near the truncation edge.
    """
    meas = spectral_measure(model)
    n = basis.n
    if meas.kind in ("point", "circle"):
        s, w = np.array([meas.s_atom(basis.B)]), np.array([meas.mass])
    else:
        s, w = meas.s_rule(basis.B, 2.0, 2 * basis.ell + 2 * n - 2)
    total = 0.0
    for i in range(0, s.size, chunk):
        table = plane_wave_table(basis, s[i : i + chunk])
        total += float(np.sum(w[i : i + chunk] * np.sum(table * table, axis=(1, 2))))
    return total / n
