"""Weak-drive perturbation series of the driven cavity in the dressed basis.

The drive only connects neighbouring excitation manifolds, so its matrix in
the polariton basis is strictly off-diagonal: first-order energy shifts
vanish for every label, and the series is assembled here through second
order from the generic Rayleigh-Schroedinger sums.  Every contributing term
is also recorded in a human-readable table so the sign and denominator of
each contribution can be audited one by one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .hamiltonians import SystemParams, build_driven, drive_amplitudes, rotating_frame_energy
from .polariton import GROUND, basis_transform, label, parse_label

REPORT_LABELS = (GROUND, "1-", "1+", "2-", "2+")
DEGENERACY_TOL = 1e-6


def polariton_labels(n_max: int):
    out = [GROUND]
    for n in range(1, n_max + 1):
        out.extend((label(n, "-"), label(n, "+")))
    return out


def unperturbed_energies(params: SystemParams, n_max: int | None = None):
    """Dressed-frame energies of the undriven labels (ground at zero)."""
    n_max = params.n_fock if n_max is None else n_max
    energies = {GROUND: 0.0}
    for n in range(1, n_max + 1):
        for branch in ("-", "+"):
            energies[label(n, branch)] = rotating_frame_energy(params, n, branch)
    return energies


@dataclass(frozen=True)
class DriveCoefficients:
    """Ladder-family drive weights per manifold (all purely imaginary)."""

    beta_plus: dict
    beta_minus: dict
    xi_to_plus: dict
    xi_to_minus: dict


def drive_coefficients(params: SystemParams) -> DriveCoefficients:
    beta_p, beta_m, xi_p, xi_m = {}, {}, {}, {}
    for n in range(1, params.n_fock + 1):
        bp, bm, xp, xm = drive_amplitudes(params, n)
        beta_p[n], beta_m[n] = bp, bm
        if n >= 2:
            xi_p[n], xi_m[n] = xp, xm
    return DriveCoefficients(beta_p, beta_m, xi_p, xi_m)


def interaction_elements(params: SystemParams):
    """Matrix elements <m|V|k> of the drive between dressed labels."""
    co = drive_coefficients(params)
    elements = {}

    def put(upper, lower, amp):
        elements[(upper, lower)] = amp
        elements[(lower, upper)] = -amp  # amp is imaginary; V is Hermitian

    for n in range(1, params.n_fock + 1):
        below_minus = label(n - 1, "-") if n >= 2 else GROUND
        below_plus = label(n - 1, "+") if n >= 2 else GROUND
        put(label(n, "+"), below_plus, co.beta_plus[n])
        put(label(n, "-"), below_minus, co.beta_minus[n])
        if n >= 2:
            put(label(n, "+"), below_minus, co.xi_to_plus[n])
            put(label(n, "-"), below_plus, co.xi_to_minus[n])
    return elements


def _check_nondegenerate(energies: dict):
    labels = list(energies)
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            if abs(energies[a] - energies[b]) < DEGENERACY_TOL:
                raise NumericalError(
                    f"unperturbed levels {a} and {b} are degenerate within "
                    f"{DEGENERACY_TOL:.0e} (gap {abs(energies[a] - energies[b]):.3e})"
                )


def second_order_energies(params: SystemParams, labels=REPORT_LABELS, terms=None):
    """Second-order energy shifts sum_l |V_lk|^2 / (E_k - E_l)."""
    energies = unperturbed_energies(params)
    _check_nondegenerate(energies)
    elements = interaction_elements(params)
    out = {}
    for k in labels:
        shift = 0.0
        for other in energies:
            if other == k or (other, k) not in elements:
                continue
            v = elements[(other, k)]
            gap = energies[k] - energies[other]
            shift += abs(v) ** 2 / gap
            if terms is not None:
                terms.append(
                    f"E2[{k}] += |V[{other},{k}]|^2 / (E0[{k}] - E0[{other}])"
                    f" = {abs(v) ** 2 / gap:+.6e}"
                )
        out[k] = shift
    return out


def corrected_states(
    params: SystemParams,
    order: int,
    labels=REPORT_LABELS,
    include_top_targets: bool = True,
    terms=None,
):
    """State-correction coefficient maps: label -> {target label -> amplitude}.

    ``order`` selects the first- or second-order correction.  Targets in the
    third manifold sit next to the truncation edge, so ``include_top_targets``
    lets callers exclude them from comparisons that must not depend on
    edge amplitudes; all coefficients follow the standard nondegenerate
    Rayleigh-Schroedinger rules.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if params.n_fock < 3:
        raise ValueError("state corrections reference the third manifold; need n_fock >= 3")
    energies = unperturbed_energies(params)
    _check_nondegenerate(energies)
    elements = interaction_elements(params)
    all_labels = list(energies)

    def allowed(target):
        if include_top_targets:
            return True
        n, _ = parse_label(target) if target != GROUND else (0, "g")
        return n < 3

    out = {}
    for k in labels:
        coeffs = {}
        for m in all_labels:
            if m == k or not allowed(m):
                continue
            if order == 1:
                if (m, k) not in elements:
                    continue
                amp = elements[(m, k)] / (energies[k] - energies[m])
                if terms is not None:
                    terms.append(f"|{k}>^(1) += V[{m},{k}] / (E0[{k}] - E0[{m}]) |{m}>")
            else:
                amp = 0.0
                for mid in all_labels:
                    if mid == k:
                        continue
                    if (m, mid) not in elements or (mid, k) not in elements:
                        continue
                    amp += (
                        elements[(m, mid)]
                        * elements[(mid, k)]
                        / ((energies[k] - energies[m]) * (energies[k] - energies[mid]))
                    )
                    if terms is not None:
                        terms.append(
                            f"|{k}>^(2) += V[{m},{mid}] V[{mid},{k}] / "
                            f"((E0[{k}] - E0[{m}])(E0[{k}] - E0[{mid}])) |{m}>"
                        )
            if amp != 0.0:
                coeffs[m] = amp
        out[k] = coeffs
    return out


def perturbed_ket(params: SystemParams, lbl: str, order: int, include_top_targets=True) -> np.ndarray:
    """Unnormalized perturbed eigenvector in the bare site basis."""
    basis = basis_transform(params.dims, params.g, params.delta)
    vec = basis.column(lbl).astype(complex).copy()
    for ord_now in range(1, order + 1):
        corr = corrected_states(
            params, ord_now, labels=(lbl,), include_top_targets=include_top_targets
        )[lbl]
        for target, amp in corr.items():
            vec = vec + amp * basis.column(target)
    return vec


def exact_eigensystem(params: SystemParams):
    """Energies and eigenvectors of the driven Hamiltonian, by dense solve."""
    h = build_driven(params)
    energies, vectors = np.linalg.eigh(h.data)
    return energies, vectors


def match_exact_energies(params: SystemParams, labels=REPORT_LABELS):
    """Exact eigenvalues matched to dressed labels by eigenvector overlap."""
    energies, vectors = exact_eigensystem(params)
    basis = basis_transform(params.dims, params.g, params.delta)
    out = {}
    for lbl in labels:
        overlaps = np.abs(vectors.conj().T @ basis.column(lbl))
        idx = int(np.argmax(overlaps))
        out[lbl] = (float(energies[idx]), float(overlaps[idx]))
    return out


@dataclass(frozen=True)
class PerturbationReport:
    """Bundle of the perturbation series for the five low-lying labels."""

    params: SystemParams
    labels: tuple
    e0: dict
    e1: dict
    e2: dict
    first_order: dict
    second_order: dict
    terms: tuple = field(default=())

    def perturbative_energy(self, lbl: str) -> float:
        return self.e0[lbl] + self.e1[lbl] + self.e2[lbl]


def perturbation_report(params: SystemParams, labels=REPORT_LABELS) -> PerturbationReport:
    terms: list = []
    e0 = unperturbed_energies(params)
    e2 = second_order_energies(params, labels, terms=terms)
    first = corrected_states(params, 1, labels, terms=terms)
    second = corrected_states(params, 2, labels, terms=terms)
    return PerturbationReport(
        params=params,
        labels=tuple(labels),
        e0={k: e0[k] for k in labels},
        e1={k: 0.0 for k in labels},
        e2=e2,
        first_order=first,
        second_order=second,
        terms=tuple(terms),
    )
