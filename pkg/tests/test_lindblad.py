import math

import numpy as np
import pytest

from jchsim import (
    DegenerateSteadyStateError,
    DensityMatrix,
    DimensionMismatchError,
    HilbertDims,
    Liouvillian,
    NumericalError,
    SystemParams,
    annihilation_at,
    bare_ket,
    build_jc,
    build_liouvillian,
    decay_channels,
    dissipator,
    evolve,
    evolve_piecewise,
    site_polariton_ket,
    standard_liouvillian,
    steady_state,
    stroboscopic_generator,
    trace_distance,
)
from jchsim.lindblad import (
    branch_decoupled_dissipator,
    hamiltonian_generator,
    zero_superoperator,
)

from conftest import random_density_matrix


def brute_force_lindblad(h, channels, rho):
    """Direct matrix evaluation of the master-equation right-hand side."""
    out = -1j * (h @ rho - rho @ h) if h is not None else np.zeros_like(rho)
    for jump, rate in channels:
        ldl = jump.conj().T @ jump
        out = out + 0.5 * rate * (2 * jump @ rho @ jump.conj().T - ldl @ rho - rho @ ldl)
    return out


class TestDissipator:
    def test_zero_rate(self):
        dims = HilbertDims(2)
        d = dissipator(annihilation_at(dims, 0), 0.0)
        assert np.max(np.abs(d.data)) == 0.0

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            dissipator(annihilation_at(HilbertDims(2), 0), -0.5)

    def test_two_level_exponential_decay(self):
        # excited-atom population decays as exp(-rate t)
        p = SystemParams(g=1e-9, omega_c=5.0, atom_decay=0.8, n_fock=2)
        liouv = build_liouvillian(build_jc(p), decay_channels(p))
        excited = bare_ket(p.dims, [(0, 1)]).density_matrix()
        times = np.linspace(0.0, 4.0, 81)
        traj = evolve(liouv, excited, times)
        pop = traj.states[:, 1, 1].real
        assert np.max(np.abs(pop - np.exp(-0.8 * times))) < 1e-9

    def test_action_matches_brute_force(self, rng):
        dims = HilbertDims(2)
        jump = annihilation_at(dims, 0)
        d = dissipator(jump, 0.7)
        rho = random_density_matrix(dims.total_dim, rng)
        direct = brute_force_lindblad(None, [(jump.data, 0.7)], rho)
        assert np.max(np.abs(d.apply(rho) - direct)) < 1e-13


class TestLiouvillian:
    def test_purely_hamiltonian_spectrum_imaginary(self):
        p = SystemParams(delta=0.3, omega_c=8.0, n_fock=2)
        liouv = build_liouvillian(build_jc(p), [])
        assert np.max(np.abs(liouv.modes().eigenvalues.real)) < 1e-10

    def test_full_action_matches_brute_force(self, rng):
        p = SystemParams(delta=0.4, omega_c=8.0, cavity_decay=0.5, atom_decay=0.5, n_fock=2)
        h = build_jc(p)
        channels = decay_channels(p)
        liouv = build_liouvillian(h, channels)
        rho = random_density_matrix(p.dims.total_dim, rng)
        direct = brute_force_lindblad(h.data, [(j.data, r) for j, r in channels], rho)
        assert np.max(np.abs(liouv.apply(rho) - direct)) < 1e-12

    def test_zero_mode_and_stability(self):
        p = SystemParams(delta=0.0, omega_c=8.0, cavity_decay=0.5, atom_decay=0.5, n_fock=3)
        modes = standard_liouvillian(p).modes()
        assert np.min(np.abs(modes.eigenvalues)) < 1e-8
        assert modes.eigenvalues.real.max() < 1e-8

    def test_generator_annihilates_trace(self, rng):
        p = SystemParams(delta=0.2, omega_c=8.0, cavity_decay=0.4, n_fock=2)
        liouv = standard_liouvillian(p)
        x = rng.standard_normal((p.dims.total_dim,) * 2)
        x = x + x.T
        assert abs(np.trace(liouv.apply(x))) < 1e-10

    def test_dimension_mismatch(self):
        h = build_jc(SystemParams(n_fock=2))
        bad = annihilation_at(HilbertDims(3), 0)
        with pytest.raises(DimensionMismatchError):
            build_liouvillian(h, [(bad, 0.1)])


class TestBranchDecoupledDissipator:
    def test_zero_rate_gives_zero(self):
        p = SystemParams(delta=12.0, omega_c=40.0, cavity_decay=0.0, n_fock=3)
        assert np.max(np.abs(branch_decoupled_dissipator(p).data)) == 0.0

    def test_branch_flow_stays_in_lower_branch(self):
        p = SystemParams(delta=20.0, omega_c=40.0, cavity_decay=0.2, n_fock=3)
        liouv = hamiltonian_generator(build_jc(p)) + branch_decoupled_dissipator(p)
        psi = site_polariton_ket(p.dims, 2, "-", p.g, p.delta)
        times = np.linspace(0.0, 30.0, 151)
        traj = evolve(liouv, psi.density_matrix(), times)
        up = site_polariton_ket(p.dims, 1, "+", p.g, p.delta).amplitudes
        up_pop = np.einsum("a,tab,b->t", up.conj(), traj.states, up).real
        assert np.max(up_pop) < 1e-10
        ground_pop = traj.states[:, 0, 0].real
        assert ground_pop[-1] > 0.99

    def test_approaches_full_lindbladian_with_detuning(self):
        # full-Lindbladian oracle: the branch-decoupled generator converges
        # to the full cavity-loss generator as the detuning grows
        distances = []
        for delta in (5.0, 10.0, 20.0):
            p = SystemParams(delta=delta, omega_c=40.0, cavity_decay=0.2, n_fock=3)
            h = build_jc(p)
            full = build_liouvillian(h, decay_channels(p))
            decoupled = hamiltonian_generator(h) + branch_decoupled_dissipator(p)
            psi = site_polariton_ket(p.dims, 2, "-", p.g, p.delta)
            times = np.linspace(0.0, 15.0, 61)
            t_full = evolve(full, psi.density_matrix(), times)
            t_dec = evolve(decoupled, psi.density_matrix(), times)
            distances.append(
                max(
                    trace_distance(t_full.state(i), t_dec.state(i))
                    for i in range(len(times))
                )
            )
        assert distances[0] > distances[1] > distances[2]


class TestEvolve:
    def test_zero_generator_constant(self, rng):
        dims = HilbertDims(2)
        rho0 = DensityMatrix(dims, random_density_matrix(dims.total_dim, rng))
        traj = evolve(zero_superoperator(dims), rho0, np.linspace(0.0, 2.0, 11))
        assert np.max(np.abs(traj.states - rho0.data)) < 1e-12

    def test_vacuum_rabi_period(self):
        # |1,g> <-> |0,e> oscillation with period pi/g at resonance
        p = SystemParams(delta=0.0, omega_c=10.0, n_fock=2)
        liouv = build_liouvillian(build_jc(p), [])
        photon = bare_ket(p.dims, [(1, 0)])
        times = np.linspace(0.0, math.pi, 201)
        traj = evolve(liouv, photon.density_matrix(), times)
        pop = traj.states[:, 2, 2].real  # |1,g> index = 2
        assert pop[0] == pytest.approx(1.0)
        assert pop[100] == pytest.approx(0.0, abs=1e-10)  # half period: fully atomic
        assert pop[-1] == pytest.approx(1.0, abs=1e-10)

    def test_drift_bounds_and_positivity(self):
        p = SystemParams(delta=0.3, omega_c=10.0, cavity_decay=0.4, atom_decay=0.3, n_fock=3)
        liouv = standard_liouvillian(p)
        psi = bare_ket(p.dims, [(2, 1)])
        traj = evolve(liouv, psi.density_matrix(), np.linspace(0.0, 10.0, 101))
        assert traj.trace_drift() < 1e-8
        assert traj.hermiticity_drift() < 1e-9
        assert traj.min_eigenvalue() > -1e-7

    def test_spectral_matches_fixed_step(self):
        p = SystemParams(delta=0.3, omega_c=10.0, cavity_decay=0.4, n_fock=2)
        liouv = standard_liouvillian(p)
        rho0 = bare_ket(p.dims, [(1, 1)]).density_matrix()
        times = np.linspace(0.0, 1.0, 11)
        spectral = evolve(liouv, rho0, times)
        stepped = evolve(liouv, rho0, times, method="rk4")
        worst = max(
            trace_distance(spectral.state(i), stepped.state(i)) for i in range(len(times))
        )
        assert worst < 1e-6

    def test_spectral_matches_fixed_step_strong_drive(self):
        # the stiffest configuration in use: strong far-detuned drive with loss
        from jchsim import build_driven, site_polariton_ket

        p = SystemParams(
            delta=0.0, omega_c=1e4, atom_drive=50.0, atom_drive_detuning=500.0,
            cavity_drive_detuning=500.0, cavity_decay=0.1, n_fock=4,
        )
        liouv = build_liouvillian(build_driven(p), decay_channels(p))
        rho0 = site_polariton_ket(p.dims, 1, "-", p.g, p.delta).density_matrix()
        times = np.linspace(0.0, 0.5, 6)
        spectral = evolve(liouv, rho0, times)
        stepped = evolve(liouv, rho0, times, method="rk4")
        worst = max(
            trace_distance(spectral.state(i), stepped.state(i)) for i in range(len(times))
        )
        assert worst < 1e-6

    def test_grid_validation(self):
        dims = HilbertDims(2)
        rho0 = bare_ket(dims, [(0, 0)]).density_matrix()
        with pytest.raises(ValueError):
            evolve(zero_superoperator(dims), rho0, [0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            evolve(zero_superoperator(dims), rho0, [0.0])

    def test_invalid_initial_state_rejected(self):
        dims = HilbertDims(2)
        bad = np.eye(dims.total_dim, dtype=complex)  # trace != 1
        with pytest.raises(ValueError):
            evolve(zero_superoperator(dims), DensityMatrix(dims, bad), [0.0, 1.0])

    def test_defective_generator_falls_back_with_warning(self):
        # a nilpotent Jordan block has no eigenbasis; the spectral route must
        # hand over to the fixed-step integrator and say so
        dims = HilbertDims(2)
        d2 = dims.total_dim**2
        data = np.zeros((d2, d2), dtype=complex)
        data[1, 2] = 1.0  # couples two coherences, leaves trace and diagonal alone
        defective = Liouvillian(dims, data)
        with pytest.raises(NumericalError):
            defective.modes()
        rho0 = bare_ket(dims, [(1, 0)]).density_matrix()
        with pytest.warns(UserWarning, match="falling back"):
            traj = evolve(defective, rho0, np.linspace(0.0, 1.0, 5))
        assert np.max(np.abs(traj.states - rho0.data)) < 1e-12


class TestSteadyState:
    def test_undriven_decay_reaches_vacuum(self):
        p = SystemParams(delta=0.4, omega_c=9.0, cavity_decay=0.5, atom_decay=0.3, n_fock=3)
        rho_ss = steady_state(standard_liouvillian(p))
        expected = bare_ket(p.dims, [(0, 0)]).density_matrix()
        assert trace_distance(rho_ss, expected) < 1e-10

    def test_two_cavity_vacuum_and_long_time_oracle(self):
        p = SystemParams(
            delta=0.2, omega_c=9.0, hopping=0.4, cavity_decay=0.5, atom_decay=0.5,
            n_fock=2, n_cavities=2,
        )
        liouv = standard_liouvillian(p)
        rho_ss = steady_state(liouv)
        vacuum = bare_ket(p.dims, [(0, 0), (0, 0)]).density_matrix()
        assert trace_distance(rho_ss, vacuum) < 1e-9
        # long-time evolution oracle from an excited product state
        psi = bare_ket(p.dims, [(1, 0), (0, 1)])
        traj = evolve(liouv, psi.density_matrix(), np.array([0.0, 60.0]))
        assert trace_distance(traj.final_state(), rho_ss) < 1e-8

    def test_degenerate_zero_space_rejected(self):
        p = SystemParams(delta=0.3, omega_c=9.0, n_fock=2)
        with pytest.raises(DegenerateSteadyStateError):
            steady_state(build_liouvillian(build_jc(p), []))

    def test_missing_zero_mode_rejected(self):
        p = SystemParams(delta=0.3, omega_c=9.0, cavity_decay=0.4, n_fock=2)
        liouv = standard_liouvillian(p)
        shifted = Liouvillian(liouv.dims, liouv.data - 0.05 * np.eye(liouv.data.shape[0]))
        with pytest.raises(NumericalError):
            steady_state(shifted)


class TestPiecewise:
    def test_semigroup_property(self):
        p = SystemParams(delta=0.4, omega_c=9.0, n_fock=2)
        h = build_jc(p)
        rho0 = bare_ket(p.dims, [(1, 0)]).density_matrix()
        double = evolve_piecewise([(h, 1.3), (h, 1.3)], rho0)
        single = evolve_piecewise([(h, 2.6)], rho0)
        assert np.max(np.abs(double.states[-1] - single.states[-1])) < 1e-10

    def test_pulse_then_free_evolution_preserves_branch(self):
        p = SystemParams(delta=0.6, omega_c=9.0, n_fock=3)
        pulse = stroboscopic_generator(p, 0)
        km = site_polariton_ket(p.dims, 1, "-", p.g, p.delta)
        traj = evolve_piecewise(
            [(pulse, math.pi / 2), (build_jc(p), 3.0)], km.density_matrix(),
            samples_per_segment=30,
        )
        kp = site_polariton_ket(p.dims, 1, "+", p.g, p.delta).amplitudes
        pop = np.einsum("a,tab,b->t", kp.conj(), traj.states, kp).real
        assert np.max(np.abs(pop[31:] - 1.0)) < 1e-10
        assert traj.segment_bounds[0][1] == pytest.approx(math.pi / 2)

    def test_dimension_mismatch_across_segments(self):
        p = SystemParams(delta=0.4, omega_c=9.0, n_fock=2)
        rho0 = bare_ket(p.dims, [(1, 0)]).density_matrix()
        other = build_jc(SystemParams(n_fock=3))
        with pytest.raises(DimensionMismatchError):
            evolve_piecewise([(other, 1.0)], rho0)

    def test_mixed_unitary_and_dissipative_segments(self):
        p = SystemParams(delta=0.4, omega_c=9.0, cavity_decay=0.5, n_fock=2)
        h = build_jc(p)
        liouv = standard_liouvillian(p)
        rho0 = bare_ket(p.dims, [(1, 0)]).density_matrix()
        traj = evolve_piecewise([(h, 0.7), (liouv, 2.0)], rho0, samples_per_segment=10)
        assert traj.trace_drift() < 1e-8
        assert len(traj.segment_bounds) == 2
