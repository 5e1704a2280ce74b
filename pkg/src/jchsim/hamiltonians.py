"""Hamiltonian builders for the one- and two-site Jaynes-Cummings lattice.

Everything is expressed in units of the atom-field coupling (g = 1 by
default) with hbar = 1.  Builders return immutable :class:`Operator` objects
and are pure functions of :class:`SystemParams`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError
from . import polariton
from .hilbert import (
    HilbertDims,
    Operator,
    annihilation_at,
    embed_site,
    fock_annihilation,
    atomic_lowering,
    lowering_at,
)

DRIVE_FRAME_TOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and frequencies of the (driven, lossy) JC lattice.

    Frequencies and rates are in units of the coupling ``g``.  ``delta`` is
    the atom-cavity detuning; the drive detunings are measured from the
    atomic drive (``atom_drive_detuning``) and the cavity drive
    (``cavity_drive_detuning``).  The cavity field decays at ``cavity_decay``
    and the atom at ``atom_decay``.
    """

    g: float = 1.0
    delta: float = 0.0
    omega_c: float = 100.0
    hopping: float = 0.0
    cavity_decay: float = 0.0
    atom_decay: float = 0.0
    atom_drive: float = 0.0
    cavity_drive: float = 0.0
    atom_drive_detuning: float = 0.0
    cavity_drive_detuning: float = 0.0
    n_fock: int = 4
    n_cavities: int = 1

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("coupling g must be positive")
        if self.cavity_decay < 0 or self.atom_decay < 0:
            raise ValueError("decay rates must be non-negative")
        HilbertDims(self.n_fock, self.n_cavities)  # validates truncation

    @property
    def omega_a(self) -> float:
        return self.omega_c + self.delta

    @property
    def drive_frame_mismatch(self) -> float:
        """Frequency difference of the two drive frames (zero when co-rotating)."""
        return self.atom_drive_detuning - self.delta - self.cavity_drive_detuning

    @property
    def dims(self) -> HilbertDims:
        return HilbertDims(self.n_fock, self.n_cavities)

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)


def build_jc(params: SystemParams) -> Operator:
    """Bare Jaynes-Cummings Hamiltonian, summed over identical sites."""
    dims = params.dims
    a_site = fock_annihilation(dims)
    sm_site = atomic_lowering(dims)
    local = (
        params.omega_a * (sm_site.dag() @ sm_site)
        + params.omega_c * (a_site.dag() @ a_site)
        + params.g * (a_site.dag() @ sm_site + sm_site.dag() @ a_site)
    )
    out = embed_site(local, 0, dims)
    for j in range(1, dims.n_cavities):
        out = out + embed_site(local, j, dims)
    return out


def build_hopping(params: SystemParams) -> Operator:
    """Photon hopping between the two neighbouring cavities."""
    dims = params.dims
    if dims.n_cavities != 2:
        raise DimensionMismatchError("hopping requires two cavities")
    a0 = annihilation_at(dims, 0)
    a1 = annihilation_at(dims, 1)
    j = params.hopping
    return j * (a0.dag() @ a1) + j * (a1.dag() @ a0)


def build_jch(params: SystemParams) -> Operator:
    """Full lattice Hamiltonian: JC on each site plus hopping."""
    h = build_jc(params)
    if params.dims.n_cavities == 2:
        h = h + build_hopping(params)
    return h


def build_jc_polariton(params: SystemParams) -> Operator:
    """JC Hamiltonian as a diagonal matrix in the polariton-ordered basis.

    The diagonal carries the dressed energies (ground entry 0); the overflow
    state keeps its bare energy so the matrix is exactly the similarity
    transform of :func:`build_jc`.
    """
    dims = params.dims
    site_basis = polariton.basis_transform(dims, params.g, params.delta)
    energies = []
    for lbl in site_basis.labels:
        if lbl == polariton.GROUND:
            energies.append(0.0)
        elif lbl == polariton.OVERFLOW:
            energies.append(params.omega_a + params.n_fock * params.omega_c)
        else:
            n, branch = polariton.parse_label(lbl)
            energies.append(
                polariton.polariton_energy(n, branch, params.g, params.delta, params.omega_c)
            )
    site_diag = np.diag(np.array(energies, dtype=complex))
    if dims.n_cavities == 1:
        return Operator(dims, site_diag)
    eye = np.eye(dims.site_dim, dtype=complex)
    total = np.kron(site_diag, eye) + np.kron(eye, site_diag)
    return Operator(dims, total)


def build_hopping_polariton(params: SystemParams) -> Operator:
    """Hopping assembled from the four polariton ladder families.

    Equivalent to :func:`build_hopping` wherever the ladder decomposition
    reproduces the photon operator (everywhere below the cutoff manifold).
    """
    dims = params.dims
    if dims.n_cavities != 2:
        raise DimensionMismatchError("hopping requires two cavities")
    parts = polariton.decompose_creation(dims, params.g, params.delta)
    raise_site = parts.total()
    r0 = embed_site(raise_site, 0, dims)
    r1 = embed_site(raise_site, 1, dims)
    j = params.hopping
    term = j * (r0 @ r1.dag())
    return term + term.dag()


def _require_corotating(params: SystemParams):
    if abs(params.drive_frame_mismatch) > DRIVE_FRAME_TOL:
        raise ValueError(
            "drive frames rotate at different rates "
            f"(mismatch {params.drive_frame_mismatch:.3e}); the time-independent "
            "driven Hamiltonian requires atom_drive_detuning = delta + cavity_drive_detuning"
        )


def build_driven(params: SystemParams) -> Operator:
    """Driven single cavity in the co-rotating drive frame (time independent)."""
    if params.n_cavities != 1:
        raise DimensionMismatchError("the driven builder covers a single cavity")
    _require_corotating(params)
    a = fock_annihilation(params.dims)
    sm = atomic_lowering(params.dims)
    return (
        params.atom_drive_detuning * (sm.dag() @ sm)
        + params.cavity_drive_detuning * (a.dag() @ a)
        + params.g * (a.dag() @ sm + sm.dag() @ a)
        + 1j * params.atom_drive * (sm.dag() - sm)
        + 1j * params.cavity_drive * (a.dag() - a)
    )


def rotating_frame_energy(params: SystemParams, n: int, branch: str) -> float:
    """Unperturbed dressed energy in the co-rotating drive frame."""
    if n == 0:
        return 0.0
    sign = {"+": 1.0, "-": -1.0}[branch]
    return (
        params.cavity_drive_detuning * n
        + 0.5 * params.delta
        + 0.5 * sign * polariton.branch_splitting(n, params.g, params.delta)
    )


def drive_amplitudes(params: SystemParams, n: int):
    """Complex drive weights multiplying the four ladder families at step n.

    Returns (beta_plus, beta_minus, xi_to_plus, xi_to_minus); each is purely
    imaginary for real drive amplitudes.
    """
    co = polariton.ladder_coefficients_for(n, params.g, params.delta)
    om, al = params.atom_drive, params.cavity_drive
    return (
        1j * (om * co.a_c_plus + al * co.c_plus),
        1j * (om * co.a_c_minus + al * co.c_minus),
        1j * (om * co.a_k_pm + al * co.k_pm),
        1j * (om * co.a_k_mp + al * co.k_mp),
    )


def build_driven_polariton(params: SystemParams) -> Operator:
    """Driven Hamiltonian assembled directly in the polariton basis.

    Literal ladder-sum form: dressed-frame energies on the diagonal plus the
    drive distributed over the four families.  The overflow row/column is
    left empty (the ladder sums stop at the cutoff manifold), so agreement
    with the transformed :func:`build_driven` holds on the labelled block.
    """
    if params.n_cavities != 1:
        raise DimensionMismatchError("the driven builder covers a single cavity")
    _require_corotating(params)
    dims = params.dims
    basis = polariton.basis_transform(dims, params.g, params.delta)
    d = dims.site_dim
    h = np.zeros((d, d), dtype=complex)
    for n in range(1, params.n_fock + 1):
        for branch in ("-", "+"):
            idx = basis.index(polariton.label(n, branch))
            h[idx, idx] = rotating_frame_energy(params, n, branch)
    for n in range(1, params.n_fock + 1):
        beta_p, beta_m, xi_pm, xi_mp = drive_amplitudes(params, n)
        lower_p = basis.index(polariton.label(n - 1, "+")) if n >= 2 else basis.index(polariton.GROUND)
        lower_m = basis.index(polariton.label(n - 1, "-")) if n >= 2 else basis.index(polariton.GROUND)
        up_p = basis.index(polariton.label(n, "+"))
        up_m = basis.index(polariton.label(n, "-"))
        for upper, lower, amp in (
            (up_p, lower_p, beta_p),
            (up_m, lower_m, beta_m),
            (up_p, lower_m, xi_pm),
            (up_m, lower_p, xi_mp),
        ):
            h[upper, lower] += amp
            h[lower, upper] += -amp  # amp is imaginary, so this is Hermitian
    return Operator(dims, h)


def rabi_frequency(params: SystemParams):
    """Effective interchange Rabi frequency under strong, far-detuned atomic drive.

    Returns ``(frequency, period)``.  Valid in the regime where the drive and
    its detuning dominate the coupling; outside it the formula is only an
    estimate.
    """
    if params.cavity_drive_detuning == 0:
        raise ValueError("cavity drive detuning must be nonzero for the Rabi estimate")
    shift = params.atom_drive**2 / params.cavity_drive_detuning
    omega_r = 2.0 * math.sqrt(params.g**2 + shift**2)
    return omega_r, 2.0 * math.pi / omega_r


def stroboscopic_generator(params: SystemParams, m: int = 0) -> Operator:
    """Branch-rotation generator of the stroboscopic detuning protocol.

    With the detuning ramp locked to delta(t) * t = pi (2m + 1) / 2 the JC
    interaction reduces to this time-independent generator; the sign is fixed
    so that for even m

        exp(-i V t) |n-> = cos(g t sqrt(n)) |n-> - sin(g t sqrt(n)) |n+>.

    For two cavities the per-site generators are summed.
    """
    if not isinstance(m, (int, np.integer)):
        raise ValueError("mode index m must be an integer")
    dims = params.dims
    a = fock_annihilation(dims)
    sm = atomic_lowering(dims)
    local = ((-1) ** m * 1j * params.g) * (a.dag() @ sm - sm.dag() @ a)
    out = embed_site(local, 0, dims)
    for j in range(1, dims.n_cavities):
        out = out + embed_site(local, j, dims)
    return out


def stroboscopic_block(params: SystemParams, m: int, n: int) -> np.ndarray:
    """2x2 action of the stroboscopic generator in the (|n->, |n+>) pair."""
    if n < 1:
        raise ValueError("manifold must be >= 1")
    v = (-1) ** m * params.g * math.sqrt(n)
    return np.array([[0.0, 1j * v], [-1j * v, 0.0]], dtype=complex)


def decay_channels(params: SystemParams):
    """Per-site photon and atom loss channels as (jump, rate) pairs."""
    dims = params.dims
    channels = []
    for j in range(dims.n_cavities):
        if params.cavity_decay > 0:
            channels.append((annihilation_at(dims, j), params.cavity_decay))
        if params.atom_decay > 0:
            channels.append((lowering_at(dims, j), params.atom_decay))
    return channels
