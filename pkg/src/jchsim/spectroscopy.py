"""Two-time correlations and absorption spectra of the lossy cavity lattice.

The two-point function is propagated with the same generator as single-time
averages (quantum regression); the half-line Fourier integral of the spectrum
is evaluated in closed form from the Liouvillian spectral decomposition,

    S(omega) = sum_k 2 Re[ d_k / (-lambda_k - i omega) ],

which avoids any windowing or truncation of a sampled correlation tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NumericalError
from .hamiltonians import SystemParams
from .hilbert import DensityMatrix, Operator
from .lindblad import Liouvillian, vectorize
from .polariton import mixing_angle, polariton_energy

STATIONARITY_TOL = 1e-6
ZERO_MODE_TOL = 1e-8
DECAY_TOL = -1e-10
AMPLITUDE_FLOOR = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Absorption spectrum on an absolute frequency grid (units of g)."""

    frequencies: np.ndarray
    values: np.ndarray
    params: SystemParams | None = None

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if freqs.ndim != 1 or freqs.shape != vals.shape:
            raise ValueError("frequency and value grids must be matching 1d arrays")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if vals.min() < -1e-6:
            raise NumericalError(f"spectrum dips to {vals.min():.3e} below the numerical floor")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class PeakReport:
    """Detected spectral peaks, ordered by increasing frequency.

    ``asymmetry`` compares the two tallest peaks A (lower frequency) and B:
    |h_A - h_B| / (h_A + h_B).
    """

    positions: np.ndarray
    heights: np.ndarray
    widths: np.ndarray
    asymmetry: float


def default_frequency_grid(params: SystemParams, n_points: int = 2001) -> np.ndarray:
    """Grid centred on the cavity frequency, wide enough for all peaks."""
    half_width = 4.0 * params.g
    if params.n_cavities == 2:
        half_width += 2.0 * abs(params.hopping)
    return np.linspace(params.omega_c - half_width, params.omega_c + half_width, n_points)


def _decaying_modes(liouv: Liouvillian, rho_ss: DensityMatrix, a_op: Operator):
    """Eigenvalues and weights of the decaying part of <a(tau) a^dag(0)>_ss."""
    if liouv.dims != rho_ss.dims or a_op.dims != rho_ss.dims:
        raise DimensionMismatchError("Liouvillian, state and operator dims differ")
    residual = float(np.max(np.abs(liouv.apply(rho_ss.data))))
    if residual >= STATIONARITY_TOL:
        raise NumericalError(
            f"correlation_function: state is not stationary (|L[rho]| = {residual:.3e})"
        )
    modes = liouv.modes()
    f0 = a_op.dag().data @ rho_ss.data
    coeff = modes.coefficients(f0)
    # Tr[a M] = vec(a^T) . vec(M) in the row-stacked convention
    trace_row = vectorize(a_op.data.T)
    weights = (trace_row @ modes.right) * coeff
    lam = modes.eigenvalues

    is_zero = np.abs(lam) < ZERO_MODE_TOL
    limit = complex(weights[is_zero].sum())
    scale = max(float(np.abs(weights).max()), 1e-300)
    contributing = (~is_zero) & (np.abs(weights) > AMPLITUDE_FLOOR * max(scale, 1.0))
    bad = contributing & (lam.real >= DECAY_TOL)
    if np.any(bad):
        worst = lam[bad][np.argmax(lam[bad].real)]
        raise NumericalError(
            "correlation does not decay: contributing mode with "
            f"Re(lambda) = {worst.real:.3e} (generator must be dissipative)"
        )
    return lam[contributing], weights[contributing], limit


def correlation_function(liouv: Liouvillian, rho_ss: DensityMatrix, a_op: Operator, t_grid) -> np.ndarray:
    """Steady-state fluctuation correlation <<a(tau) a^dag(0)>>_ss.

    The long-time limit (the zero-mode projection of the initial condition)
    is subtracted, so the returned series decays to zero.
    """
    lam, weights, _ = _decaying_modes(liouv, rho_ss, a_op)
    tau = np.asarray(t_grid, dtype=float)
    if np.any(tau < 0):
        raise ValueError("correlation lags must be non-negative")
    return (weights[None, :] * np.exp(np.outer(tau, lam))).sum(axis=1)


def absorption_spectrum(
    liouv: Liouvillian,
    rho_ss: DensityMatrix,
    a_op: Operator,
    freq_grid,
    params: SystemParams | None = None,
) -> Spectrum:
    """Absorption spectrum from the exact half-line Fourier integral."""
    lam, weights, _ = _decaying_modes(liouv, rho_ss, a_op)
    omega = np.asarray(freq_grid, dtype=float)
    denom = -lam[None, :] - 1j * omega[:, None]
    values = 2.0 * (weights[None, :] / denom).real.sum(axis=1)
    return Spectrum(omega, values, params)


def lorentzian_rates(params: SystemParams):
    """Branch linewidths (gamma_plus, gamma_minus) of the n = 1 doublet."""
    theta = mixing_angle(1, params.g, params.delta)
    s2, c2 = math.sin(theta) ** 2, math.cos(theta) ** 2
    g_plus = 0.5 * (s2 * params.cavity_decay + c2 * params.atom_decay)
    g_minus = 0.5 * (c2 * params.cavity_decay + s2 * params.atom_decay)
    return g_plus, g_minus


def absorption_spectrum_analytic(params: SystemParams, freq_grid=None) -> Spectrum:
    """Closed-form two-Lorentzian spectrum of the weakly excited single cavity.

    Valid in the three-level manifold {ground, lower, upper polariton}: one
    Lorentzian per branch, centred on the dressed energies, weighted by the
    photonic fractions sin^2(theta_1) and cos^2(theta_1).
    """
    if params.n_cavities != 1:
        raise DimensionMismatchError("the closed form covers a single cavity")
    omega = np.asarray(
        default_frequency_grid(params) if freq_grid is None else freq_grid, dtype=float
    )
    theta = mixing_angle(1, params.g, params.delta)
    g_plus, g_minus = lorentzian_rates(params)
    e_plus = polariton_energy(1, "+", params.g, params.delta, params.omega_c)
    e_minus = polariton_energy(1, "-", params.g, params.delta, params.omega_c)
    values = 2.0 * math.sin(theta) ** 2 * g_plus / ((omega - e_plus) ** 2 + g_plus**2)
    values += 2.0 * math.cos(theta) ** 2 * g_minus / ((omega - e_minus) ** 2 + g_minus**2)
    return Spectrum(omega, values, params)


def _parabolic_refine(x: np.ndarray, y: np.ndarray, i: int):
    """Vertex of the parabola through three samples around a maximum."""
    if i == 0 or i == len(x) - 1:
        return float(x[i]), float(y[i])
    denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
    if denom >= -1e-300:
        return float(x[i]), float(y[i])
    shift = 0.5 * (y[i - 1] - y[i + 1]) / denom
    shift = float(np.clip(shift, -1.0, 1.0))
    step = 0.5 * (x[i + 1] - x[i - 1])
    pos = x[i] + shift * step
    height = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * shift
    return float(pos), float(height)


def _half_height_width(x: np.ndarray, y: np.ndarray, i: int, height: float) -> float:
    half = height / 2.0
    left = x[0]
    for j in range(i, 0, -1):
        if y[j - 1] <= half <= y[j]:
            frac = (y[j] - half) / (y[j] - y[j - 1])
            left = x[j] - frac * (x[j] - x[j - 1])
            break
    right = x[-1]
    for j in range(i, len(x) - 1):
        if y[j + 1] <= half <= y[j]:
            frac = (y[j] - half) / (y[j] - y[j + 1])
            right = x[j] + frac * (x[j + 1] - x[j])
            break
    return float(right - left)


def find_peaks(spectrum: Spectrum, min_height_fraction: float = 0.01) -> PeakReport:
    """Local maxima above a fraction of the global maximum, with FWHM.

    Positions are refined by parabolic interpolation; widths come from
    linear interpolation of the half-height crossings.
    """
    x, y = spectrum.frequencies, spectrum.values
    if len(x) < 3:
        raise ValueError("need at least three grid points to find peaks")
    floor = min_height_fraction * y.max()
    idx = [
        i
        for i in range(1, len(x) - 1)
        if y[i] >= y[i - 1] and y[i] > y[i + 1] and y[i] >= floor
    ]
    if not idx:
        raise NumericalError("find_peaks: no peaks above threshold")
    refined = [_parabolic_refine(x, y, i) for i in idx]
    positions = np.array([p for p, _ in refined])
    heights = np.array([h for _, h in refined])
    widths = np.array([_half_height_width(x, y, i, h) for i, (_, h) in zip(idx, refined)])
    order = np.argsort(positions)
    positions, heights, widths = positions[order], heights[order], widths[order]
    if len(positions) >= 2:
        tallest = np.argsort(heights)[-2:]
        a_idx, b_idx = sorted(tallest, key=lambda k: positions[k])
        h_a, h_b = heights[a_idx], heights[b_idx]
        asymmetry = abs(h_a - h_b) / (h_a + h_b)
    else:
        asymmetry = 0.0
    return PeakReport(positions, heights, widths, float(asymmetry))
