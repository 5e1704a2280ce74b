"""Machine-checkable invariant suite, run at reduced sizes.

Each check returns a named pass/fail record with a one-line detail; the CLI
serializes the records as JSON.  A corruption hook lets tests verify that a
broken ingredient is caught and named by the right check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import polariton
from .hamiltonians import (
    SystemParams,
    build_driven,
    build_hopping,
    build_jc,
    build_jc_polariton,
    build_jch,
    stroboscopic_generator,
)
from .hilbert import (
    DensityMatrix,
    HilbertDims,
    annihilation_at,
    atomic_lowering,
    bare_ket,
    fock_annihilation,
    lowering_at,
    partial_trace,
    total_excitation,
)
from .lindblad import evolve, evolve_closed, standard_liouvillian, steady_state, trace_distance
from .protocols import branch_weight_operator, product_polariton_ket


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, value, bound, comparison="<"):
    if comparison == "<":
        ok = value < bound
        detail = f"{value:.3e} {'<' if ok else '>='} {bound:.0e}"
    else:
        ok = value > bound
        detail = f"{value:.3e} {'>' if ok else '<='} {bound:.0e}"
    return CheckResult(name, bool(ok), detail)


def _random_density(dims: HilbertDims, rng) -> DensityMatrix:
    d = dims.total_dim
    raw = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = raw @ raw.conj().T
    return DensityMatrix(dims, rho / np.trace(rho))


def run_selfcheck(corruption: str | None = None) -> list:
    """Run every module's invariant checks at reduced sizes."""
    rng = np.random.default_rng(20240817)
    results = []
    single = SystemParams(delta=0.4, omega_c=50.0, cavity_decay=0.3, atom_decay=0.2, n_fock=3)
    pair = SystemParams(
        delta=0.4, omega_c=50.0, hopping=0.2, cavity_decay=0.3, atom_decay=0.2,
        n_fock=2, n_cavities=2,
    )

    # --- operator algebra -------------------------------------------------
    dims = single.dims
    a = fock_annihilation(dims)
    sm = atomic_lowering(dims)
    results.append(
        _result(
            "adjoint_involution",
            max(
                float(np.max(np.abs(op.dag().dag().data - op.data)))
                for op in (a, sm, a.dag() @ sm)
            ),
            1e-15,
        )
    )
    comm = (a @ a.dag() - a.dag() @ a).data
    below = dims.site_dim - 2  # the two top states feel the cutoff
    results.append(
        _result(
            "ladder_commutator_below_cutoff",
            float(np.max(np.abs(comm[:below, :below] - np.eye(below)))),
            1e-12,
        )
    )
    pdims = pair.dims
    a0, a1 = annihilation_at(pdims, 0), annihilation_at(pdims, 1)
    s1 = lowering_at(pdims, 1)
    results.append(
        _result(
            "site_commutation",
            max(
                float(np.max(np.abs((x @ y - y @ x).data)))
                for x, y in ((a0, a1), (a0, s1.dag()))
            ),
            1e-12,
        )
    )
    rho2 = _random_density(pdims, rng)
    reduced = partial_trace(rho2, 0)
    trace_err = abs(np.trace(reduced.data) - 1.0)
    min_eig = float(np.linalg.eigvalsh(reduced.data).min())
    results.append(_result("partial_trace_trace", float(trace_err), 1e-10))
    results.append(_result("partial_trace_positivity", -min(min_eig, 0.0), 1e-10))

    # --- polariton basis --------------------------------------------------
    worst_diag = 0.0
    worst_complete = 0.0
    for delta in (-1.5, 0.0, 0.7, 8.0):
        p = single.with_(delta=delta)
        basis = polariton.basis_transform(p.dims, p.g, delta)
        h = build_jc(p).data
        transformed = basis.matrix.conj().T @ h @ basis.matrix
        worst_diag = max(
            worst_diag,
            float(np.max(np.abs(transformed - np.diag(np.diag(transformed))))),
        )
        gram = basis.matrix @ basis.matrix.conj().T
        worst_complete = max(
            worst_complete, float(np.max(np.abs(gram - np.eye(p.dims.site_dim))))
        )
    results.append(_result("polariton_diagonalization", worst_diag, 1e-10))
    results.append(_result("polariton_completeness", worst_complete, 1e-12))

    worst_rebuild = 0.0
    for delta in (0.0, 1.3):
        p = single.with_(delta=delta)
        parts = polariton.decompose_creation(p.dims, p.g, delta)
        rebuilt = parts.total().data
        if corruption == "ladder-coefficients":
            rebuilt = rebuilt + 0.01 * np.eye(p.dims.site_dim)
        atom_parts = polariton.decompose_atomic_raising(p.dims, p.g, delta)
        labelled = polariton.basis_transform(p.dims, p.g, delta)
        keep = [
            i for i, lbl in enumerate(labelled.labels)
            if lbl != polariton.OVERFLOW
            and (lbl == polariton.GROUND or polariton.parse_label(lbl)[0] < p.n_fock)
        ]
        proj = labelled.matrix[:, keep] @ labelled.matrix[:, keep].conj().T
        a_dag_full = fock_annihilation(p.dims).dag().data
        sp_full = atomic_lowering(p.dims).dag().data
        worst_rebuild = max(
            worst_rebuild,
            float(np.max(np.abs((rebuilt - a_dag_full) @ proj))),
            float(np.max(np.abs((atom_parts.total().data - sp_full) @ proj))),
        )
    results.append(_result("ladder_reconstruction", worst_rebuild, 1e-10))

    sym_err = 0.0
    for n in (2, 3):
        co_pos = polariton.ladder_coefficients_for(n, 1.0, 1.1)
        co_neg = polariton.ladder_coefficients_for(n, 1.0, -1.1)
        sym_err = max(sym_err, abs(co_pos.k_pm - co_neg.k_mp))
    results.append(_result("coefficient_detuning_symmetry", sym_err, 1e-12))

    # --- Hamiltonians -----------------------------------------------------
    builders = [build_jc(pair), build_hopping(pair), build_jch(pair), build_jc_polariton(pair)]
    drive = single.with_(
        atom_drive=0.3, cavity_drive=0.1, atom_drive_detuning=0.9, cavity_drive_detuning=0.5
    )
    builders.append(build_driven(drive))
    builders.append(stroboscopic_generator(single, 1))
    results.append(
        _result(
            "hamiltonian_hermiticity",
            max(float(np.max(np.abs(h.data - h.data.conj().T))) for h in builders),
            1e-12,
        )
    )
    n_total = total_excitation(pdims)
    h_latt = build_jch(pair)
    results.append(
        _result(
            "excitation_conservation",
            float(np.max(np.abs((h_latt @ n_total - n_total @ h_latt).data))),
            1e-12,
        )
    )

    worst_rot = 0.0
    gen = stroboscopic_generator(single, 0)
    for n in (1, 2, 3):
        ket = polariton.site_polariton_ket(single.dims, n, "-", single.g, single.delta)
        for gt in (0.3, 1.1):
            amps = evolve_closed(gen, ket, np.array([0.0, gt]))[-1]
            expected = math.cos(gt * math.sqrt(n)) * ket.amplitudes - math.sin(
                gt * math.sqrt(n)
            ) * polariton.site_polariton_ket(single.dims, n, "+", single.g, single.delta).amplitudes
            worst_rot = max(worst_rot, float(np.max(np.abs(amps - expected))))
    results.append(_result("stroboscopic_rotation", worst_rot, 1e-10))

    # --- Lindblad engine ----------------------------------------------------
    liouv = standard_liouvillian(single)
    herm = rng.standard_normal((dims.total_dim, dims.total_dim))
    herm = herm + herm.T
    results.append(
        _result(
            "generator_trace_preservation",
            abs(np.trace(liouv.apply(herm))),
            1e-10,
        )
    )
    modes = liouv.modes()
    results.append(
        _result("liouvillian_zero_mode", float(np.min(np.abs(modes.eigenvalues))), 1e-8)
    )
    results.append(
        _result("liouvillian_stability", float(modes.eigenvalues.real.max()), 1e-8)
    )
    rho_ss = steady_state(liouv)
    results.append(
        _result("steady_state_residual", float(np.max(np.abs(liouv.apply(rho_ss.data)))), 1e-8)
    )

    psi0 = bare_ket(dims, [(2, 0)])
    traj = evolve(liouv, psi0.density_matrix(), np.linspace(0.0, 6.0, 121))
    results.append(_result("evolve_trace_drift", traj.trace_drift(), 1e-8))
    results.append(_result("snapshot_positivity", -min(traj.min_eigenvalue(), 0.0), 1e-7))

    short = np.linspace(0.0, 1.0, 21)
    spectral = evolve(liouv, psi0.density_matrix(), short)
    stepped = evolve(liouv, psi0.density_matrix(), short, method="rk4")
    dist = max(
        trace_distance(spectral.state(i), stepped.state(i)) for i in range(len(short))
    )
    results.append(_result("spectral_vs_fixed_step", float(dist), 1e-6))

    # --- branch separability (closed lattice, weak hopping) ----------------
    sep = pair.with_(cavity_decay=0.0, atom_decay=0.0, hopping=0.1, delta=0.5)
    psi = product_polariton_ket(sep.dims, [(1, "-"), (1, "-")], sep.g, sep.delta)
    times = np.linspace(0.0, 10.0 / sep.hopping, 201)
    amps = evolve_closed(build_jch(sep), psi, times)
    up_op = branch_weight_operator(sep.dims, "+", sep).data
    up_weight = np.einsum("ti,ij,tj->t", amps.conj(), up_op, amps).real
    results.append(_result("branch_separability", float(up_weight.max()), 0.1))

    return results


def selfcheck_report(corruption: str | None = None) -> dict:
    results = run_selfcheck(corruption)
    return {
        "passed": all(r.passed for r in results),
        "checks": {r.name: {"passed": r.passed, "detail": r.detail} for r in results},
    }
