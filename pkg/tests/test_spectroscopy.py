import math

import numpy as np
import pytest

from jchsim import (
    NumericalError,
    Spectrum,
    SystemParams,
    absorption_spectrum,
    absorption_spectrum_analytic,
    annihilation_at,
    correlation_function,
    default_frequency_grid,
    find_peaks,
    mixing_angle,
    polariton_energy,
    site_polariton_ket,
    standard_liouvillian,
    steady_state,
)
from jchsim.spectroscopy import lorentzian_rates


@pytest.fixture(scope="module")
def resonant_setup():
    params = SystemParams(omega_c=100.0, delta=0.0, cavity_decay=0.5, atom_decay=0.5, n_fock=4)
    liouv = standard_liouvillian(params)
    return params, liouv, steady_state(liouv)


@pytest.fixture(scope="module")
def detuned_setup():
    params = SystemParams(omega_c=100.0, delta=1.0, cavity_decay=0.5, atom_decay=0.5, n_fock=4)
    liouv = standard_liouvillian(params)
    return params, liouv, steady_state(liouv)


class TestCorrelationFunction:
    def test_undamped_generator_rejected(self):
        p = SystemParams(omega_c=100.0, delta=0.0, n_fock=3)
        liouv = standard_liouvillian(p)
        vac = site_polariton_ket(p.dims, 1, "-", p.g, p.delta)  # stationary eigenstate
        with pytest.raises(NumericalError, match="does not decay"):
            correlation_function(
                liouv, vac.density_matrix(), annihilation_at(p.dims, 0), np.linspace(0, 5, 11)
            )

    def test_nonstationary_state_rejected(self, resonant_setup):
        params, liouv, _ = resonant_setup
        moving = site_polariton_ket(params.dims, 2, "-", params.g, params.delta)
        with pytest.raises(NumericalError, match="not stationary"):
            correlation_function(
                liouv, moving.density_matrix(), annihilation_at(params.dims, 0),
                np.linspace(0, 5, 11),
            )

    def test_three_level_double_exponential(self, detuned_setup):
        params, liouv, rho_ss = detuned_setup
        taus = np.linspace(0.0, 8.0, 161)
        corr = correlation_function(liouv, rho_ss, annihilation_at(params.dims, 0), taus)
        theta = mixing_angle(1, params.g, params.delta)
        g_plus, g_minus = lorentzian_rates(params)
        e_plus = polariton_energy(1, "+", params.g, params.delta, params.omega_c)
        e_minus = polariton_energy(1, "-", params.g, params.delta, params.omega_c)
        model = math.sin(theta) ** 2 * np.exp((-1j * e_plus - g_plus) * taus)
        model += math.cos(theta) ** 2 * np.exp((-1j * e_minus - g_minus) * taus)
        assert np.max(np.abs(corr - model)) < 1e-10

    def test_initial_value(self, resonant_setup):
        params, liouv, rho_ss = resonant_setup
        corr = correlation_function(
            liouv, rho_ss, annihilation_at(params.dims, 0), np.array([0.0, 1.0])
        )
        # <a a^dag>_vacuum = 1 and the long-time limit vanishes
        assert corr[0].real == pytest.approx(1.0, abs=1e-10)
        assert abs(corr[0].imag) < 1e-10


class TestNumericSpectrum:
    def test_resonant_peaks_symmetric(self, resonant_setup):
        params, liouv, rho_ss = resonant_setup
        spec = absorption_spectrum(
            liouv, rho_ss, annihilation_at(params.dims, 0), default_frequency_grid(params), params
        )
        report = find_peaks(spec)
        step = spec.frequencies[1] - spec.frequencies[0]
        assert len(report.positions) == 2
        assert report.positions[0] == pytest.approx(99.0, abs=step)
        assert report.positions[1] == pytest.approx(101.0, abs=step)
        assert report.asymmetry < 1e-3

    def test_detuned_peak_positions(self, detuned_setup):
        params, liouv, rho_ss = detuned_setup
        spec = absorption_spectrum(
            liouv, rho_ss, annihilation_at(params.dims, 0), default_frequency_grid(params), params
        )
        report = find_peaks(spec)
        step = spec.frequencies[1] - spec.frequencies[0]
        assert report.positions[0] == pytest.approx(100 + (1 - math.sqrt(5)) / 2, abs=step)
        assert report.positions[-1] == pytest.approx(100 + (1 + math.sqrt(5)) / 2, abs=step)

    def test_matches_analytic_form(self, resonant_setup, detuned_setup):
        for params, liouv, rho_ss in (resonant_setup, detuned_setup):
            grid = default_frequency_grid(params)
            numeric = absorption_spectrum(
                liouv, rho_ss, annihilation_at(params.dims, 0), grid, params
            )
            analytic = absorption_spectrum_analytic(params, grid)
            rel = np.max(np.abs(numeric.values - analytic.values)) / analytic.values.max()
            assert rel < 1e-3

    def test_spectral_consistency_with_mode_frequencies(self, resonant_setup):
        # peak positions match imaginary parts of decaying Liouvillian modes
        params, liouv, rho_ss = resonant_setup
        spec = absorption_spectrum(
            liouv, rho_ss, annihilation_at(params.dims, 0), default_frequency_grid(params), params
        )
        report = find_peaks(spec)
        mode_freqs = -liouv.modes().eigenvalues.imag
        step = spec.frequencies[1] - spec.frequencies[0]
        for pos in report.positions:
            assert np.min(np.abs(mode_freqs - pos)) < step

    def test_positive_finite_integral(self, resonant_setup):
        params, liouv, rho_ss = resonant_setup
        spec = absorption_spectrum(
            liouv, rho_ss, annihilation_at(params.dims, 0), default_frequency_grid(params), params
        )
        integral = np.trapezoid(spec.values, spec.frequencies)
        assert 0.0 < integral < np.inf


class TestAnalyticSpectrum:
    def test_resonant_heights(self):
        # gamma_+ = gamma_- = g/4; each branch contributes 2 (1/2)/(g/4) = 4/g
        # on resonance, plus the small tail of the opposite Lorentzian
        params = SystemParams(omega_c=100.0, delta=0.0, cavity_decay=0.5, atom_decay=0.5)
        g_plus, g_minus = lorentzian_rates(params)
        assert g_plus == pytest.approx(0.25)
        assert g_minus == pytest.approx(0.25)
        own = 2.0 * 0.5 / 0.25
        tail = 2.0 * 0.5 * 0.25 / (4.0 + 0.25**2)
        assert own == pytest.approx(4.0)
        spec = absorption_spectrum_analytic(params)
        report = find_peaks(spec)
        assert np.allclose(report.heights, own + tail, rtol=1e-4)
        assert np.allclose(report.widths, 0.5, rtol=2e-2)  # FWHM ~ 2 gamma

    def test_asymmetry_from_detuning_only(self):
        params = SystemParams(omega_c=100.0, delta=1.0, cavity_decay=0.5, atom_decay=0.5)
        g_plus, g_minus = lorentzian_rates(params)
        assert g_plus == pytest.approx(g_minus)
        report = find_peaks(absorption_spectrum_analytic(params))
        theta = mixing_angle(1, 1.0, 1.0)
        expected = abs(math.cos(theta) ** 2 - math.sin(theta) ** 2)
        assert report.asymmetry == pytest.approx(expected, abs=0.02)

    def test_dispersive_lower_branch_dominates(self):
        params = SystemParams(omega_c=100.0, delta=30.0, cavity_decay=0.5, atom_decay=0.5)
        grid = np.linspace(60.0, 140.0, 4001)
        report = find_peaks(absorption_spectrum_analytic(params, grid))
        # the upper-branch peak falls below the reporting floor entirely
        assert len(report.positions) == 1
        e_minus = polariton_energy(1, "-", 1.0, 30.0, 100.0)
        assert report.positions[0] == pytest.approx(e_minus, abs=0.05)
        theta = mixing_angle(1, 1.0, 30.0)
        assert math.sin(theta) ** 2 / math.cos(theta) ** 2 < 0.01


class TestFindPeaks:
    def test_two_lorentzian_recovery(self):
        x = np.linspace(-4.0, 4.0, 2001)
        y = 1.0 / ((x + 1.2) ** 2 + 0.01) + 0.5 / ((x - 0.9) ** 2 + 0.04)
        report = find_peaks(Spectrum(x, y))
        step = x[1] - x[0]
        assert report.positions[0] == pytest.approx(-1.2, abs=step)
        assert report.positions[1] == pytest.approx(0.9, abs=step)

    def test_no_peaks_raises(self):
        x = np.linspace(0.0, 1.0, 31)
        with pytest.raises(NumericalError):
            find_peaks(Spectrum(x, np.linspace(0.0, 1.0, 31)))

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            find_peaks(Spectrum(np.array([0.0, 1.0]), np.array([1.0, 2.0])))


def test_spectrum_rejects_undamped_generator():
    p = SystemParams(omega_c=100.0, delta=0.0, n_fock=3)
    liouv = standard_liouvillian(p)
    stationary = site_polariton_ket(p.dims, 1, "-", p.g, p.delta).density_matrix()
    with pytest.raises(NumericalError, match="does not decay"):
        absorption_spectrum(
            liouv, stationary, annihilation_at(p.dims, 0), np.linspace(96, 104, 11), p
        )


def test_spectrum_floor_enforced():
    x = np.linspace(0.0, 1.0, 5)
    with pytest.raises(NumericalError, match="floor"):
        Spectrum(x, np.array([0.0, 1.0, -0.5, 1.0, 0.0]))


def test_default_grid_extends_with_hopping():
    single = SystemParams(omega_c=100.0)
    pair = SystemParams(omega_c=100.0, hopping=10.0, n_fock=2, n_cavities=2)
    g1 = default_frequency_grid(single)
    g2 = default_frequency_grid(pair)
    assert g1[0] == pytest.approx(96.0) and g1[-1] == pytest.approx(104.0)
    assert g2[0] == pytest.approx(76.0) and g2[-1] == pytest.approx(124.0)
