import numpy as np
import pytest
from numpy.testing import assert_allclose

from heomcorr.bath import (
    BathParameters,
    bath_correlation,
    matsubara_expansion,
    spectral_density,
)
from heomcorr.errors import ParameterError

REF_BATH = BathParameters(eta=0.3, gamma=4.0, beta=2.5)


class TestParameters:
    @pytest.mark.parametrize("kwargs", [
        dict(eta=-0.1, gamma=4.0, beta=2.5),
        dict(eta=0.3, gamma=0.0, beta=2.5),
        dict(eta=0.3, gamma=4.0, beta=-1.0),
    ])
    def test_domain_violations(self, kwargs):
        with pytest.raises(ParameterError):
            BathParameters(**kwargs)

    def test_cotangent_pole_guard(self):
        with pytest.raises(ParameterError):
            BathParameters(eta=0.3, gamma=2.0 * np.pi, beta=1.0)


class TestSpectralDensity:
    def test_odd_at_origin(self):
        assert spectral_density(0.0, REF_BATH) == 0.0

    def test_peak_at_cutoff(self):
        assert spectral_density(4.0, REF_BATH) == pytest.approx(0.15)
        grid = np.linspace(0.01, 20, 2000)
        assert spectral_density(grid, REF_BATH).max() <= 0.15 + 1e-12

    def test_direct_value(self):
        assert spectral_density(8.0, REF_BATH) == pytest.approx(0.12, abs=1e-15)

    def test_odd_function(self):
        omega = np.linspace(-10, 10, 101)
        assert_allclose(spectral_density(omega, REF_BATH),
                        -spectral_density(-omega, REF_BATH), atol=1e-15)


class TestExpansion:
    def test_leading_rate_is_cutoff(self):
        exp = matsubara_expansion(REF_BATH, 3)
        assert exp.gammas[0] == 4.0

    def test_first_matsubara_rate(self):
        exp = matsubara_expansion(REF_BATH, 1)
        assert exp.gammas[1] == pytest.approx(2.5132741228718345, abs=1e-14)

    def test_leading_coefficient(self):
        exp = matsubara_expansion(REF_BATH, 0)
        assert exp.coeffs[0].real == pytest.approx(-0.1774877493196473, abs=1e-12)
        assert exp.coeffs[0].imag == pytest.approx(-0.6, abs=1e-15)

    def test_rates_strictly_increasing_past_first(self):
        exp = matsubara_expansion(REF_BATH, 6)
        assert np.all(np.diff(exp.gammas[1:]) > 0)

    def test_thermal_coefficients_real(self):
        exp = matsubara_expansion(REF_BATH, 6)
        assert_allclose(exp.coeffs[1:].imag, 0.0)
        assert exp.coeffs[0].imag == pytest.approx(-REF_BATH.eta * REF_BATH.gamma / 2)

    def test_first_thermal_coefficient_negative_below_cutoff(self):
        # gamma_1 < gamma here, so the verbatim coefficient formula is negative
        exp = matsubara_expansion(REF_BATH, 1)
        assert exp.gammas[1] < exp.gammas[0]
        assert exp.coeffs[1].real < 0

    def test_terminator_modes_agree(self):
        # the closed-form value of the full series equals the tail sum, so
        # both conventions coincide to roundoff
        for k in (0, 1, 2, 5, 9):
            a = matsubara_expansion(REF_BATH, k, "closed-form").terminator
            b = matsubara_expansion(REF_BATH, k, "tail-sum").terminator
            assert a == pytest.approx(b, abs=1e-12)

    def test_terminator_is_real(self):
        # the imaginary parts of the closed form and of c_0/gamma_0 cancel
        exp = matsubara_expansion(REF_BATH, 4)
        assert exp.terminator.imag == pytest.approx(0.0, abs=1e-15)

    def test_terminator_increment_shrinks_when_doubling(self):
        deltas = {k: matsubara_expansion(REF_BATH, k).terminator for k in (1, 2, 4, 8, 16, 32)}
        increments = [abs(deltas[2 * k] - deltas[k]) for k in (1, 2, 4, 8, 16)]
        assert all(a > b for a, b in zip(increments, increments[1:]))

    def test_deterministic(self):
        a = matsubara_expansion(REF_BATH, 5)
        b = matsubara_expansion(REF_BATH, 5)
        assert a.gammas.tobytes() == b.gammas.tobytes()
        assert a.coeffs.tobytes() == b.coeffs.tobytes()
        assert a.terminator == b.terminator

    def test_rate_collision_rejected(self):
        # beta chosen so gamma_2 = 2*pi*2/beta hits gamma exactly
        gamma = 5.0
        beta = 4.0 * np.pi / gamma
        with pytest.raises(ParameterError):
            matsubara_expansion(BathParameters(eta=0.3, gamma=gamma, beta=beta), 3)

    def test_negative_cutoff_rejected(self):
        with pytest.raises(ParameterError):
            matsubara_expansion(REF_BATH, -1)

    def test_unknown_terminator_mode(self):
        with pytest.raises(ParameterError):
            matsubara_expansion(REF_BATH, 2, "renormalized")


class TestCorrelationFunction:
    def test_zero_lag_is_coefficient_sum(self):
        exp = matsubara_expansion(REF_BATH, 4)
        assert bath_correlation(0.0, exp) == pytest.approx(np.sum(exp.coeffs))

    def test_decay_envelope(self):
        exp = matsubara_expansion(REF_BATH, 4)
        t = 3.0
        bound = abs(np.sum(exp.coeffs)) * np.exp(-np.min(exp.gammas) * t)
        assert abs(bath_correlation(t, exp)) < bound

    def test_single_term(self):
        exp = matsubara_expansion(REF_BATH, 0)
        t = 1.0 / exp.gammas[0]
        assert bath_correlation(t, exp) == pytest.approx(exp.coeffs[0] * np.exp(-1.0))

    def test_zero_lag_real_part_positive_when_converged(self):
        # the series tail decays like 1/k, so the truncated real part turns
        # positive once enough thermal terms are kept
        for params in (REF_BATH,
                       BathParameters(eta=0.1, gamma=2.0, beta=1.0),
                       BathParameters(eta=1.0, gamma=5.0, beta=0.5)):
            exp = matsubara_expansion(params, 64)
            assert bath_correlation(0.0, exp).real > 0

    def test_array_input(self):
        exp = matsubara_expansion(REF_BATH, 2)
        t = np.array([0.0, 0.5, 1.0])
        out = bath_correlation(t, exp)
        assert out.shape == (3,)
        assert out[0] == pytest.approx(np.sum(exp.coeffs))
