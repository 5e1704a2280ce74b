"""Dressed-state machinery for a single Jaynes-Cummings site.

Each excitation manifold n >= 1 is spanned by |n,g> and |n-1,e> and splits
into a lower (-) and upper (+) branch rotated by the mixing angle theta_n.
The photon and atom raising operators decompose into four ladder families:
two that stay within a branch and two that interchange branches.

The truncated space has one leftover state |n_fock, e> (its would-be partner
|n_fock + 1, g> is cut off); it is carried as the explicit ``OVERFLOW`` label
so that basis transforms stay unitary on the whole space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import ATOM_E, ATOM_G, HilbertDims, Ket, Operator, bare_ket, product_ket

GROUND = "G"
OVERFLOW = "overflow"

#: hopping-product families in the interaction picture (first factor raising
#: on one site, second factor lowering on the neighbour)
PRODUCT_FAMILIES = ("++", "--", "+-", "+pm", "+mp")


def label(n: int, branch: str) -> str:
    """Canonical text label for a polariton state, e.g. ``'2-'``."""
    if n == 0:
        return GROUND
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    return f"{n}{branch}"


def parse_label(text: str):
    """Inverse of :func:`label`; ``'0'`` and ``'G'`` both mean the ground state."""
    text = text.strip()
    if text in (GROUND, "0", "0g"):
        return (0, "g")
    branch = text[-1]
    if branch not in ("+", "-") or not text[:-1].isdigit():
        raise ValueError(f"cannot parse polariton label {text!r}")
    return (int(text[:-1]), branch)


def parse_state_spec(spec: str):
    """Parse a product-state name like ``'1-,0'`` into per-site labels."""
    return [parse_label(tok) for tok in spec.split(",")]


def mixing_angle(n: int, g: float, delta: float) -> float:
    """Branch mixing angle of manifold n.

    Computed with a two-argument arctangent of (g sqrt(n), delta/2) so the
    angle passes continuously through pi/4 at resonance and covers
    delta <= 0 with values in (pi/4, pi/2).
    """
    if n < 1:
        raise ValueError("mixing angle is defined for manifolds n >= 1")
    if g <= 0:
        raise ValueError("coupling g must be positive")
    return 0.5 * math.atan2(g * math.sqrt(n), 0.5 * delta)


def branch_splitting(n: int, g: float, delta: float) -> float:
    """Energy distance between the branches of manifold n."""
    if n < 1:
        return 0.0
    return math.sqrt(delta**2 + 4.0 * g * g * n)


def polariton_energy(n: int, branch: str, g: float, delta: float, omega_c: float) -> float:
    """Eigenenergy of |n+-> (the ground state has energy 0)."""
    if n == 0:
        return 0.0
    sign = {"+": 1.0, "-": -1.0}[branch]
    return omega_c * n + 0.5 * delta + 0.5 * sign * branch_splitting(n, g, delta)


def polariton_ket(dims: HilbertDims, n: int, branch: str, theta: float) -> Ket:
    """Site-level dressed state of manifold n at mixing angle theta."""
    site = dims.site()
    if n < 1 or n > site.n_fock:
        raise ValueError(f"manifold {n} outside 1..{site.n_fock}")
    amps = np.zeros(site.site_dim, dtype=complex)
    if branch == "-":
        amps[site.site_index(n, ATOM_G)] = math.cos(theta)
        amps[site.site_index(n - 1, ATOM_E)] = -math.sin(theta)
    elif branch == "+":
        amps[site.site_index(n, ATOM_G)] = math.sin(theta)
        amps[site.site_index(n - 1, ATOM_E)] = math.cos(theta)
    else:
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    return Ket(site, amps)


def ground_ket(dims: HilbertDims) -> Ket:
    return bare_ket(dims.site(), [(0, ATOM_G)])


def site_polariton_ket(dims: HilbertDims, n: int, branch: str, g: float, delta: float) -> Ket:
    if n == 0:
        return ground_ket(dims)
    return polariton_ket(dims, n, branch, mixing_angle(n, g, delta))


def product_polariton_ket(dims: HilbertDims, site_labels, g: float, delta: float) -> Ket:
    """Product of per-site polariton states, e.g. labels [(1,'-'), (0,'g')]."""
    kets = [site_polariton_ket(dims, n, b, g, delta) for n, b in site_labels]
    return product_ket(dims, kets)


@dataclass(frozen=True)
class PolaritonBasis:
    """Unitary change of basis from the bare site basis to polariton order.

    Column order: ground, (1,-), (1,+), ..., (n_fock,-), (n_fock,+) and the
    overflow state |n_fock, e> last.
    """

    dims: HilbertDims
    g: float
    delta: float
    labels: tuple
    matrix: np.ndarray

    def index(self, lbl: str) -> int:
        return self.labels.index(lbl)

    def column(self, lbl: str) -> np.ndarray:
        return self.matrix[:, self.index(lbl)]


def basis_transform(dims: HilbertDims, g: float, delta: float) -> PolaritonBasis:
    """Site-level polariton basis matrix (columns are the dressed kets)."""
    site = dims.site()
    labels = [GROUND]
    columns = [ground_ket(site).amplitudes]
    for n in range(1, site.n_fock + 1):
        theta = mixing_angle(n, g, delta)
        for branch in ("-", "+"):
            labels.append(label(n, branch))
            columns.append(polariton_ket(site, n, branch, theta).amplitudes)
    overflow = np.zeros(site.site_dim, dtype=complex)
    overflow[site.site_index(site.n_fock, ATOM_E)] = 1.0
    labels.append(OVERFLOW)
    columns.append(overflow)
    matrix = np.column_stack(columns)
    matrix.setflags(write=False)
    return PolaritonBasis(site, g, delta, tuple(labels), matrix)


def full_basis_matrix(dims: HilbertDims, g: float, delta: float):
    """Basis matrix and labels for the whole (possibly two-site) space."""
    site_basis = basis_transform(dims, g, delta)
    if dims.n_cavities == 1:
        return site_basis.matrix, tuple((lbl,) for lbl in site_basis.labels)
    matrix = np.kron(site_basis.matrix, site_basis.matrix)
    labels = tuple(
        (l0, l1) for l0 in site_basis.labels for l1 in site_basis.labels
    )
    return matrix, labels


@dataclass(frozen=True)
class LadderCoefficients:
    """Weights of the four polariton ladder families in one manifold step.

    ``c_plus``/``c_minus`` keep the branch; ``k_pm`` raises |n-1,-> to |n,+>
    and ``k_mp`` raises |n-1,+> to |n,->.  The ``a_*`` set plays the same
    role for the atomic raising operator.
    """

    n: int
    c_plus: float
    c_minus: float
    k_pm: float
    k_mp: float
    a_c_plus: float
    a_c_minus: float
    a_k_pm: float
    a_k_mp: float


def ladder_coefficients(n: int, theta_n: float, theta_prev: float) -> LadderCoefficients:
    """Ladder weights for the step from manifold n-1 to n.

    For n = 1 pass any ``theta_prev``; the cross-family weights vanish there
    because the ground state has no branch structure.
    """
    if n < 1:
        raise ValueError("ladder coefficients are defined for n >= 1")
    sin_n, cos_n = math.sin(theta_n), math.cos(theta_n)
    if n == 1:
        return LadderCoefficients(
            n=1,
            c_plus=sin_n,
            c_minus=cos_n,
            k_pm=0.0,
            k_mp=0.0,
            a_c_plus=cos_n,
            a_c_minus=-sin_n,
            a_k_pm=0.0,
            a_k_mp=0.0,
        )
    sin_p, cos_p = math.sin(theta_prev), math.cos(theta_prev)
    rt_n, rt_m = math.sqrt(n), math.sqrt(n - 1)
    return LadderCoefficients(
        n=n,
        c_plus=rt_n * sin_n * sin_p + rt_m * cos_n * cos_p,
        c_minus=rt_n * cos_n * cos_p + rt_m * sin_n * sin_p,
        k_pm=rt_n * sin_n * cos_p - rt_m * cos_n * sin_p,
        k_mp=rt_n * cos_n * sin_p - rt_m * sin_n * cos_p,
        a_c_plus=cos_n * sin_p,
        a_c_minus=-sin_n * cos_p,
        a_k_pm=cos_n * cos_p,
        a_k_mp=-sin_n * sin_p,
    )


def ladder_coefficients_for(n: int, g: float, delta: float) -> LadderCoefficients:
    theta_n = mixing_angle(n, g, delta)
    theta_prev = mixing_angle(n - 1, g, delta) if n >= 2 else 0.0
    return ladder_coefficients(n, theta_n, theta_prev)


@dataclass(frozen=True)
class LadderDecomposition:
    """The four raising families whose sum rebuilds a^dag (or sigma^+).

    ``within_plus``/``within_minus`` hold |n+><(n-1)+| and |n-><(n-1)-|
    terms; ``cross_to_plus`` holds |n+><(n-1)-| and ``cross_to_minus``
    holds |n-><(n-1)+| terms (n >= 2 for the cross families).
    """

    within_plus: Operator
    within_minus: Operator
    cross_to_plus: Operator
    cross_to_minus: Operator

    def total(self) -> Operator:
        return (
            self.within_plus
            + self.within_minus
            + self.cross_to_plus
            + self.cross_to_minus
        )

    def parts(self):
        return {
            "within_plus": self.within_plus,
            "within_minus": self.within_minus,
            "cross_to_plus": self.cross_to_plus,
            "cross_to_minus": self.cross_to_minus,
        }


def _assemble_families(dims: HilbertDims, g: float, delta: float, atomic: bool):
    site = dims.site()
    d = site.site_dim
    mats = {key: np.zeros((d, d), dtype=complex) for key in
            ("within_plus", "within_minus", "cross_to_plus", "cross_to_minus")}

    def ket(n, branch):
        if n == 0:
            return ground_ket(site).amplitudes
        return site_polariton_ket(site, n, branch, g, delta).amplitudes

    for n in range(1, site.n_fock + 1):
        co = ladder_coefficients_for(n, g, delta)
        up_p, up_m = ket(n, "+"), ket(n, "-")
        lo_p, lo_m = ket(n - 1, "+"), ket(n - 1, "-")
        if atomic:
            cp, cm, kpm, kmp = co.a_c_plus, co.a_c_minus, co.a_k_pm, co.a_k_mp
        else:
            cp, cm, kpm, kmp = co.c_plus, co.c_minus, co.k_pm, co.k_mp
        mats["within_plus"] += cp * np.outer(up_p, lo_p.conj())
        mats["within_minus"] += cm * np.outer(up_m, lo_m.conj())
        if n >= 2:
            mats["cross_to_plus"] += kpm * np.outer(up_p, lo_m.conj())
            mats["cross_to_minus"] += kmp * np.outer(up_m, lo_p.conj())
    return LadderDecomposition(**{k: Operator(site, v) for k, v in mats.items()})


def decompose_creation(dims: HilbertDims, g: float, delta: float) -> LadderDecomposition:
    """Polariton ladder decomposition of the photon creation operator."""
    return _assemble_families(dims, g, delta, atomic=False)


def decompose_atomic_raising(dims: HilbertDims, g: float, delta: float) -> LadderDecomposition:
    """Polariton ladder decomposition of the atomic raising operator."""
    return _assemble_families(dims, g, delta, atomic=True)


def interaction_picture_frequency(
    family: str, n: int, n_prime: int, g: float, delta: float
) -> float:
    """Oscillation frequency of a hopping product in the interaction picture.

    The first factor raises manifold n-1 -> n on one site, the second lowers
    n_prime -> n_prime-1 on the neighbour.  Frequencies follow the
    branch-splitting differences R_n - R_{n-1} (branch-preserving factors)
    and sums R_n + R_{n-1} (branch-interchanging factors); a product is a
    candidate for the rotating-wave approximation only if its frequency is
    bounded away from zero.
    """
    if family not in PRODUCT_FAMILIES:
        raise ValueError(f"unknown product family {family!r}")
    if n < 1 or n_prime < 1:
        raise ValueError("manifold indices must be >= 1")
    r = lambda k: branch_splitting(k, g, delta)
    raise_diff = r(n) - r(n - 1)
    lower_diff = r(n_prime) - r(n_prime - 1)
    lower_sum = r(n_prime) + r(n_prime - 1)
    if family == "++":
        return raise_diff - lower_diff
    if family == "--":
        return -raise_diff + lower_diff
    if family == "+-":
        return raise_diff + lower_diff
    if family == "+pm":
        return raise_diff + lower_sum
    return raise_diff - lower_sum  # "+mp"


def rwa_report(g: float, delta: float, hopping: float, n_max: int):
    """Eligibility table for dropping hopping products under the RWA.

    A product is flagged eliminable when its oscillation frequency is at
    least four times the hopping strength; branch-interchanging families
    carry no weight in the n = 1 manifold because the cross coefficients
    vanish there.
    """
    rows = []
    for family in PRODUCT_FAMILIES:
        for n in range(1, n_max + 1):
            for n_prime in range(1, n_max + 1):
                freq = interaction_picture_frequency(family, n, n_prime, g, delta)
                weightless = family in ("+pm", "+mp") and n_prime == 1
                rows.append(
                    {
                        "family": family,
                        "n": n,
                        "n_prime": n_prime,
                        "frequency": freq,
                        "eliminable": abs(freq) >= 4.0 * abs(hopping),
                        "vanishes": weightless,
                    }
                )
    return rows
