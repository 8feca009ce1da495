"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The heavy ensembles (n = 256, R = 400) are computed once per session.
"""

import functools
import math

import numpy as np
import pytest

from landaudos.bands import decay_tensor, gamma2_closed_form, gamma2_variational, sigma2
from landaudos.bounds import (
    ReferenceDensity,
    band_sigma0,
    bound_gaussian_boehm,
    bound_gaussian_cmu,
    reference_wegner,
)
from landaudos.cli import main
from landaudos.covariance import CovarianceModel, MuChoice, evaluate_radial
from landaudos.landau import LandauBasis, radial_matrix_element
from landaudos.mc import (
    MatrixEnsembleSpec,
    accumulate_dos,
    effective_model,
    expected_second_moment,
    ks_distance,
    sample_matrix,
)
from landaudos.specfun import g_function, g_recurrence_defect, laguerre

pytestmark = pytest.mark.acceptance

B = 1.0
HEAVY_N = 256
HEAVY_R = 400
WHITE = CovarianceModel("delta_limit", alpha2=1.0)


def gaussian(btau2, c0=1.0):
    return CovarianceModel("gaussian", c0=c0, tau=math.sqrt(btau2 / B))


def heavy_spec(kind, ell):
    model = gaussian(4.0) if kind == "gaussian" else WHITE
    basis = LandauBasis(B, ell, HEAVY_N)
    return MatrixEnsembleSpec(basis, model, realizations=HEAVY_R, seed=20240 + ell, surrogate_btau2=0.01)


def finite_n_moment(kind, ell):
    """Exact E[(1/n) tr V^2] of the ensemble actually sampled."""
    spec = heavy_spec(kind, ell)
    return expected_second_moment(effective_model(spec), spec.basis)


@functools.lru_cache(maxsize=None)
def heavy_run(kind, ell):
    """Histogram of the n = 256, R = 400 ensemble at +-5 sigma_ell."""
    spec = heavy_spec(kind, ell)
    model, basis = spec.model, spec.basis
    sigma = math.sqrt(sigma2(model, basis))
    return accumulate_dos(spec, (-5 * sigma, 5 * sigma), bins=201), sigma


def test_criterion_1_special_functions(acceptance):
    worst = 0.0
    for ell in range(1, 6):
        for n in range(5, 201):
            xi = np.linspace(0.0, 2.0 * n, 81)
            worst = max(worst, float(np.max(np.abs(g_recurrence_defect(ell, n, xi)))))
    n = 400
    low = min(g_function(ell, n, 0.5 * n) for ell in range(4))
    high = max(g_function(ell, n, 1.5 * n) for ell in range(4))
    ok = worst <= 1e-10 and low > 0.99 and high < 0.01
    acceptance(
        "1 special functions",
        ok,
        f"max recurrence defect {worst:.2e} (<= 1e-10); min G(0.5n) {low:.6f} (> 0.99); max G(1.5n) {high:.2e} (< 0.01)",
    )
    assert ok


def test_criterion_2_band_variance(acceptance):
    worst_closed = 0.0
    for ell in range(6):
        for btau2 in (0.3, 1.0, 2.5):
            model = CovarianceModel("bessel_oscillating", c0=1.0, tau=math.sqrt(btau2 / B))
            x = 1.0 / btau2
            closed = math.exp(-x) * float(laguerre(ell, 0, x)) ** 2
            worst_closed = max(worst_closed, abs(sigma2(model, LandauBasis(B, ell, 1)) - closed))
    worst_route = 0.0
    for ell in range(6):
        for btau2 in (0.5, 2.0, 10.0):
            model = gaussian(btau2)
            basis = LandauBasis(B, ell, 1)
            direct = radial_matrix_element(basis, 0, 0, lambda r: evaluate_radial(model, r), rtol=1e-12)
            worst_route = max(worst_route, abs(sigma2(model, basis) - direct))
    ok = worst_closed <= 1e-10 and worst_route <= 1e-8
    acceptance(
        "2 band variance",
        ok,
        f"bessel closed form max error {worst_closed:.2e} (<= 1e-10); gaussian position-space route {worst_route:.2e} (<= 1e-8)",
    )
    assert ok


def test_criterion_3_null_point(acceptance):
    model = CovarianceModel("bessel_oscillating", c0=1.0, tau=1.0)
    spec = MatrixEnsembleSpec(LandauBasis(B, 1, 16), model, sampler="exact_matrix", realizations=200, seed=3)
    hist = accumulate_dos(spec, (-1.0, 1.0), bins=20)
    m2, _ = hist.second_moment()
    ok = m2 <= 1e-6 * model.c0
    acceptance("3 null point", ok, f"mean (1/n) tr V^2 = {m2:.2e} (<= 1e-6)")
    assert ok


def test_criterion_4_decay_energy(acceptance):
    worst_gap = 0.0
    worst_sandwich = 0.0
    for ell in range(4):
        for btau2 in (0.5, 2.0, 10.0):
            model = gaussian(btau2)
            basis = LandauBasis(B, ell, 32)
            g2 = gamma2_variational(model, basis).value
            exact = gamma2_closed_form(model, ell, B)
            s2 = sigma2(model, basis)
            worst_gap = max(worst_gap, abs(g2 - exact) / exact)
            worst_sandwich = max(worst_sandwich, s2 * s2 / model.c0 - g2, g2 - s2)
    ok = worst_gap <= 1e-6 and worst_sandwich <= 1e-8
    acceptance(
        "4 decay energy",
        ok,
        f"max relative gap {worst_gap:.2e} (<= 1e-6); worst sandwich violation {worst_sandwich:.2e} (<= 1e-8)",
    )
    assert ok


def _curve_max_on_bins(curve, edges):
    # the curve is even and decreasing in |E|, so its bin maximum sits at the edge nearest zero
    near = np.where(edges[:-1] * edges[1:] <= 0, 0.0, np.minimum(np.abs(edges[:-1]), np.abs(edges[1:])))
    return curve(near)


def test_criterion_5_bound_domination(acceptance):
    model = gaussian(4.0)
    details = []
    ok = True
    for ell in (0, 1):
        hist, _ = heavy_run("gaussian", ell)
        curve = bound_gaussian_cmu(model, MuChoice("coherent_density", ell=ell, k=0), B, ell)
        bound = _curve_max_on_bins(curve, hist.bin_edges)
        excess = hist.density - bound - 3 * hist.stderr
        good = bool(np.all(excess <= 0))
        if ell == 0:
            boehm = bound_gaussian_boehm(model, B)
            same = bool(np.allclose(curve(hist.centers), boehm(hist.centers), rtol=1e-8))
            good = good and same
        ok = ok and good
        details.append(f"ell={ell} worst excess {np.max(excess):.3e} (<= 0), max density/bound {np.max(hist.density / bound):.3f}")
    acceptance("5 bound domination", ok, "; ".join(details))
    assert ok


def test_criterion_6_wegner(acceptance):
    hist, _ = heavy_run("white", 0)
    sigma0 = band_sigma0(WHITE, B)
    target = WHITE.alpha2 * B / (2 * math.pi)
    m2, m2_se = hist.second_moment()
    moment_ok = abs(m2 - target) <= 0.03 * target
    ref = ReferenceDensity("wegner_exact_l0", sigma0)
    ks = ks_distance(hist, ref.cdf)
    ks_ok = ks <= 0.05
    w0 = reference_wegner(sigma0, 0.0)
    w0_ok = abs(w0 - 2.0 / (math.pi**1.5 * sigma0)) <= 1e-10
    # log-density slope on |E| in [2, 3.5] sigma, both signs pooled, in three half-sigma windows
    absE = np.abs(hist.centers) / sigma0
    logs = []
    for lo in (2.0, 2.5, 3.0):
        sel = (absE >= lo) & (absE < lo + 0.5)
        logs.append(math.log(hist.density[sel].mean()))
    slopes = np.diff(logs) / 0.5
    E = np.linspace(2.0, 3.5, 31) * sigma0
    ref_slope = np.gradient(np.log(reference_wegner(sigma0, E)), E)
    slope_ok = bool(slopes[0] < 0 and slopes[1] < slopes[0] and np.all(ref_slope < 0) and np.all(np.diff(ref_slope) < 0))
    acceptance(
        "6a second moment",
        moment_ok,
        f"{m2:.5f} +- {m2_se:.5f} vs alpha^2 B/2pi = {target:.5f}, relative deficit {1 - m2 / target:.4f} (<= 0.03); "
        f"exact finite-n value of the sampled ensemble {finite_n_moment('white', 0):.5f}",
    )
    acceptance("6b KS to Wegner density", ks_ok, f"{ks:.4f} (<= 0.05)")
    acceptance("6c w(0) formula", w0_ok, f"|w(0) - 2/(pi^1.5 sigma0)| = {abs(w0 - 2.0 / (math.pi**1.5 * sigma0)):.1e}")
    acceptance("6d log-slope steepens", slope_ok, f"empirical slopes {slopes[0]:.3f}, {slopes[1]:.3f} per sigma0")
    assert moment_ok and ks_ok and w0_ok and slope_ok


def test_criterion_7_semicircle_trend(acceptance):
    dist = {}
    shape = {}
    for ell in (2, 8):
        hist, sigma = heavy_run("white", ell)
        dist[ell] = ks_distance(hist, ReferenceDensity("semi_elliptic", sigma).cdf)
        # diagnostic only: the same distance with the scale of the exact finite-n second moment
        sigma_n = math.sqrt(finite_n_moment("white", ell))
        shape[ell] = ks_distance(hist, ReferenceDensity("semi_elliptic", sigma_n).cdf)
    ok = dist[8] <= 0.1 and dist[8] < dist[2]
    acceptance(
        "7 semicircle trend",
        ok,
        f"KS ell=8 {dist[8]:.4f} (<= 0.1), ell=2 {dist[2]:.4f} (must exceed ell=8); "
        f"at the finite-n scale: ell=8 {shape[8]:.4f}, ell=2 {shape[2]:.4f}",
    )
    assert ok


def test_criterion_8_sampler_equivalence(acceptance):
    model = gaussian(4.0)
    basis = LandauBasis(B, 0, 16)
    R = 5000
    sigma = math.sqrt(sigma2(model, basis))
    window = (-5 * sigma, 5 * sigma)
    specs = {
        name: MatrixEnsembleSpec(basis, model, sampler=name, realizations=R, seed=808, modes=4096)
        for name in ("spectral_field", "exact_matrix")
    }
    hists = {name: accumulate_dos(sp, window, bins=51) for name, sp in specs.items()}
    a, b = hists["spectral_field"], hists["exact_matrix"]
    z_bins = np.abs(a.density - b.density) / np.sqrt(a.stderr**2 + b.stderr**2 + 1e-300)
    blocks = decay_tensor(model, basis).blocks()
    n = basis.n
    z_entries = 0.0
    for sp in specs.values():
        v = np.array([sample_matrix(sp, r).entries for r in range(R)])
        for p, blk in enumerate(blocks):
            idx = np.arange(n - p)
            x = v[:, idx, idx + p]
            prod = (x[:, :, None] * np.conj(x[:, None, :])).real
            se = prod.std(axis=0, ddof=1) / math.sqrt(R)
            z = np.abs(prod.mean(axis=0) - blk) / (se + 1e-300)
            z_entries = max(z_entries, float(np.max(np.where(se > 0, z, 0.0))))
    ok = float(np.max(z_bins)) <= 4 and z_entries <= 4
    acceptance(
        "8 sampler equivalence",
        ok,
        f"max per-bin z {np.max(z_bins):.2f} (<= 4); max entry second-moment z {z_entries:.2f} (<= 4)",
    )
    assert ok


def test_criterion_9_evenness_normalization(acceptance):
    lines = []
    ok = True
    for kind, ell in (("gaussian", 0), ("gaussian", 1), ("white", 0), ("white", 2), ("white", 8)):
        hist, sigma = heavy_run(kind, ell)
        mean, se = hist.mean()
        scale = sigma / math.sqrt(HEAVY_N * HEAVY_R)
        mass_gap = abs(hist.mass - (1 - hist.overflow_fraction))
        good = abs(mean) <= 3 * scale and mass_gap <= 1e-12 and hist.overflow_fraction < 1e-3
        ok = ok and good
        lines.append(
            f"{kind} ell={ell}: |mean|/(sigma/sqrt(nR)) {abs(mean) / scale:.2f}, mean/se {mean / se:+.2f}, "
            f"overflow {hist.overflow_fraction:.1e}"
        )
    acceptance("9 evenness and normalization", ok, "; ".join(lines))
    assert ok


def test_criterion_10_determinism(acceptance, tmp_path):
    cfg = tmp_path / "det.toml"
    cfg.write_text(
        '[landau]\nB = 1.0\nell = 1\nn = 64\n[covariance]\nkind = "gaussian"\nc0 = 1.0\ntau = 2.0\n'
        "[mc]\nrealizations = 40\nseed = 99\n"
    )
    runs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["simulate", "--config", str(cfg), "--out", str(out), "--workers", "1"]) == 0
        runs.append((out / "dos_histogram.csv").read_bytes())
    ok = runs[0] == runs[1]
    acceptance("10 determinism", ok, f"dos_histogram.csv identical across two runs ({len(runs[0])} bytes)")
    assert ok
