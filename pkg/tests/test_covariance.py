import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from landaudos.covariance import (
    CovarianceModel,
    MuChoice,
    c_mu,
    evaluate,
    evaluate_radial,
    spectral_measure,
)
from landaudos.errors import (
    DomainError,
    PositivityViolationError,
    UnsupportedOperationError,
)
from landaudos.landau import LandauBasis, basis_function

GAUSS = CovarianceModel("gaussian", c0=1.5, tau=2.0)
POLY = CovarianceModel("poly_gaussian", c0=1.0, tau=1.3)
BESSEL = CovarianceModel("bessel_oscillating", c0=2.0, tau=0.8)
CONST = CovarianceModel("constant", c0=0.7)
DELTA = CovarianceModel("delta_limit", alpha2=3.0)
PROPER = [GAUSS, POLY, BESSEL, CONST]


class TestModel:
    def test_validation(self):
        with pytest.raises(DomainError):
            CovarianceModel("gaussian", c0=1.0)
        with pytest.raises(DomainError):
            CovarianceModel("gaussian", c0=-1.0, tau=1.0)
        with pytest.raises(DomainError):
            CovarianceModel("delta_limit", alpha2=1.0, c0=1.0)
        with pytest.raises(DomainError):
            CovarianceModel("constant", c0=1.0, tau=1.0)
        with pytest.raises(DomainError):
            CovarianceModel("lorentzian", c0=1.0, tau=1.0)

    def test_variance(self):
        assert GAUSS.variance == 1.5
        assert DELTA.variance == math.inf and not DELTA.proper

    def test_surrogate_matches_white_noise_density(self):
        sur = CovarianceModel.gaussian_surrogate(DELTA, B=2.0, btau2=1e-2)
        assert sur.kind == "gaussian" and 2.0 * sur.tau**2 == pytest.approx(1e-2)
        assert spectral_measure(sur).density(0.0) == pytest.approx(spectral_measure(DELTA).density(5.0))
        assert CovarianceModel.gaussian_surrogate(GAUSS, 1.0) is GAUSS


class TestEvaluate:
    def test_origin(self):
        for m in PROPER:
            assert evaluate(m, [0.0, 0.0]) == pytest.approx(m.c0, rel=1e-15)

    def test_bessel_first_zero(self):
        root = float(mpmath.findroot(lambda x: mpmath.besselj(0, x), 2.4))
        r = BESSEL.tau * root / math.sqrt(2)
        assert abs(evaluate(BESSEL, [r, 0.0])) < 1e-9

    def test_delta_has_no_values(self):
        with pytest.raises(UnsupportedOperationError):
            evaluate(DELTA, [0.0, 0.0])

    @given(st.floats(-30, 30), st.floats(-30, 30))
    def test_bounded_and_even(self, x1, x2):
        for m in PROPER:
            v = evaluate(m, [x1, x2])
            assert abs(v) <= m.c0 * (1 + 1e-14)
            assert v == evaluate(m, [-x1, -x2])

    def test_gaussian_nonincreasing(self):
        r = np.linspace(0, 20, 400)
        assert np.all(np.diff(evaluate_radial(GAUSS, r)) <= 0)


class TestSpectralMeasure:
    @pytest.mark.parametrize("model", [GAUSS, POLY])
    def test_mass_by_radial_quadrature(self, model):
        meas = spectral_measure(model)
        mass, _ = integrate.quad(lambda k: 2 * np.pi * k * meas.density(k), 0, np.inf, epsabs=1e-14, epsrel=1e-13)
        assert mass == pytest.approx(model.c0, abs=1e-10)
        assert meas.mass == model.c0

    @pytest.mark.parametrize("model", PROPER)
    def test_s_integrate_mass(self, model):
        meas = spectral_measure(model)
        assert meas.integrate(lambda s: np.ones_like(s), 1.7) == pytest.approx(model.c0, rel=1e-12)

    @pytest.mark.parametrize("model", PROPER)
    def test_inverse_transform(self, model):
        meas = spectral_measure(model)
        r = np.linspace(0.0, 6.0, 20)
        assert meas.inverse_transform(0.0)[0] == pytest.approx(model.c0, rel=1e-12)
        assert np.max(np.abs(meas.inverse_transform(r) - evaluate_radial(model, r))) < 1e-8

    def test_bessel_circle(self):
        meas = spectral_measure(BESSEL)
        assert meas.kind == "circle"
        assert meas.circle_radius == pytest.approx(math.sqrt(2) / BESSEL.tau)
        assert meas.s_atom(2.0) == pytest.approx(meas.circle_radius**2 / 4.0, rel=1e-15)

    def test_delta_is_flat_and_improper(self):
        meas = spectral_measure(DELTA)
        assert meas.improper and meas.mass == math.inf
        assert meas.density(np.array([0.0, 10.0])) == pytest.approx(3.0 / (2 * np.pi) ** 2)
        with pytest.raises(UnsupportedOperationError):
            meas.inverse_transform(1.0)

    @pytest.mark.parametrize("model", [GAUSS, POLY, DELTA])
    def test_s_rule_exact_for_exponential_polynomials(self, model):
        # int ds c~_s(s) s^3 e^{-2s}, oracle by mpmath quadrature of the s-density
        B = 1.3
        meas = spectral_measure(model)
        s, w = meas.s_rule(B, extra_rate=2.0, degree=3)
        got = float(np.sum(w * s**3 * np.exp(-2 * s)))
        dens = lambda x: float(meas.s_density(np.array([float(x)]), B)[0])
        ref = mpmath.quad(lambda x: dens(x) * x**3 * mpmath.exp(-2 * x), [0, 1, 10, mpmath.inf])
        assert got == pytest.approx(float(ref), rel=1e-12)


def radial_integral(f, B, ell, k, r_max=40.0):
    basis = LandauBasis(B, ell, 1)

    def integrand(r):
        return 2 * np.pi * r * f(r) * abs(basis_function(basis, k, np.array([r, 0.0]))) ** 2

    val, _ = integrate.quad(integrand, 0, r_max, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


class TestCMu:
    def test_constant_point_mass(self):
        cm = c_mu(CONST, MuChoice("point_mass"))
        assert np.allclose(cm(np.array([0.0, 3.0, 100.0])), math.sqrt(0.7), rtol=1e-15)

    def test_gaussian_point_mass(self):
        cm = c_mu(GAUSS, MuChoice("point_mass"))
        r = np.linspace(0, 10, 11)
        assert np.allclose(cm(r), math.sqrt(1.5) * np.exp(-(r**2) / 8.0), rtol=1e-14)
        assert cm.normalization_check == pytest.approx(1.0)

    @pytest.mark.parametrize("B", [1.0, 0.5])
    def test_coherent_lowest_level_at_origin(self, B):
        cm = c_mu(GAUSS, MuChoice("coherent_density", ell=0, k=0), B=B)
        # numerator by position-space quadrature, gamma from the Gaussian convolution
        beta = B * GAUSS.tau**2
        numerator = radial_integral(lambda r: evaluate_radial(GAUSS, r), B, 0, 0)
        gamma = math.sqrt(GAUSS.c0 * beta / (beta + 2))
        assert cm(0.0) == pytest.approx(numerator / gamma, abs=1e-8)

    @pytest.mark.parametrize("ell,k", [(0, 0), (1, 0), (2, -2), (1, 3)])
    def test_coherent_normalization(self, ell, k):
        B = 1.2
        cm = c_mu(GAUSS, MuChoice("coherent_density", ell=ell, k=k), B=B)
        # int mu C_mu with mu = |phi|^2 / gamma
        total = radial_integral(cm, B, ell, k, r_max=25.0) * cm.normalization
        assert total == pytest.approx(1.0, abs=1e-8)
        assert cm.normalization_check == pytest.approx(1.0, abs=1e-8)

    def test_coherent_delta_limit(self):
        B = 1.0
        cm = c_mu(DELTA, MuChoice("coherent_density", ell=1, k=0), B=B)
        # gamma^2 = alpha^2 int |phi|^4, so C_mu = alpha^2 |phi|^2 / gamma
        basis = LandauBasis(B, 1, 1)
        r = np.array([0.0, 0.7, 2.0])
        dens = np.abs(basis_function(basis, 0, np.stack([r, 0 * r], axis=-1))) ** 2
        quartic, _ = integrate.quad(
            lambda t: 2 * np.pi * t * abs(basis_function(basis, 0, np.array([t, 0.0]))) ** 4, 0, 30, epsabs=1e-14
        )
        gamma = math.sqrt(DELTA.alpha2 * quartic)
        assert np.allclose(cm(r), DELTA.alpha2 * dens / gamma, rtol=1e-9, atol=1e-14)

    def test_bessel_violates_positivity(self):
        with pytest.raises(PositivityViolationError):
            c_mu(BESSEL, MuChoice("point_mass"))
        with pytest.raises(PositivityViolationError):
            c_mu(BESSEL, MuChoice("coherent_density", ell=0), B=1.0)

    def test_poly_gaussian_point_mass_fails(self):
        # the bracket 1 - 7u/8 + u^2/8 is negative for 1 < u < 6
        with pytest.raises(PositivityViolationError):
            c_mu(POLY, MuChoice("point_mass"))

    def test_poly_gaussian_gaussian_mu(self):
        tau = POLY.tau
        radii = np.linspace(0.0, 12.0 * tau, 97)
        mu = MuChoice("custom_radial", radii=tuple(radii), weights=tuple(np.exp(-(radii**2) / (8 * tau**2))))
        cm = c_mu(POLY, mu)
        assert np.min(cm(cm.check_radii)) >= -1e-10
        assert cm.normalization_check == pytest.approx(1.0, abs=1e-8)
        # the normalization N has no closed form; just record that it is finite and positive
        assert 0 < cm.normalization < np.inf

    def test_custom_mu_of_gaussian_matches_convolution(self):
        # mu = Gaussian of variance a^2 per axis convolved with C gives a Gaussian of tau^2 + a^2
        a = 0.9
        radii = np.linspace(0.0, 12.0 * a, 121)
        mu = MuChoice("custom_radial", radii=tuple(radii), weights=tuple(np.exp(-(radii**2) / (2 * a * a))))
        cm = c_mu(GAUSS, mu)
        r = np.array([0.0, 1.0, 4.0])
        t2 = GAUSS.tau**2 + a * a
        shape = np.exp(-(r**2) / (2 * t2))
        # the table is linearly interpolated, so mu itself is off by about h^2/8 |f''|
        assert np.allclose(cm(r) / cm(0.0), shape, rtol=2e-3)

    def test_validation(self):
        with pytest.raises(DomainError):
            MuChoice("coherent_density", ell=1, k=-2)
        with pytest.raises(DomainError):
            MuChoice("custom_radial", radii=(0.5, 1.0), weights=(1.0, 1.0))
        with pytest.raises(DomainError):
            MuChoice("custom_radial", radii=(0.0, 1.0), weights=(1.0, -1.0))
        with pytest.raises(UnsupportedOperationError):
            c_mu(DELTA, MuChoice("point_mass"))
