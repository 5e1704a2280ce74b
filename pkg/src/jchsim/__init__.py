"""Dressed-state and Lindblad numerics for small Jaynes-Cummings(-Hubbard) lattices."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateSteadyStateError,
    DimensionMismatchError,
    JchsimError,
    NumericalError,
)
from .hilbert import (
    DensityMatrix,
    HilbertDims,
    Ket,
    Operator,
    annihilation_at,
    atomic_lowering,
    bare_ket,
    embed_site,
    excitation_number_at,
    expectation,
    fock_annihilation,
    lowering_at,
    partial_trace,
    product_ket,
    real_expectation,
    total_excitation,
)
from .polariton import (
    LadderCoefficients,
    LadderDecomposition,
    PolaritonBasis,
    basis_transform,
    branch_splitting,
    decompose_atomic_raising,
    decompose_creation,
    interaction_picture_frequency,
    ladder_coefficients,
    ladder_coefficients_for,
    mixing_angle,
    polariton_energy,
    polariton_ket,
    product_polariton_ket,
    rwa_report,
    site_polariton_ket,
)
from .hamiltonians import (
    SystemParams,
    build_driven,
    build_driven_polariton,
    build_hopping,
    build_hopping_polariton,
    build_jc,
    build_jc_polariton,
    build_jch,
    decay_channels,
    drive_amplitudes,
    rabi_frequency,
    stroboscopic_block,
    stroboscopic_generator,
)
from .lindblad import (
    Liouvillian,
    Trajectory,
    branch_decoupled_dissipator,
    build_liouvillian,
    dissipator,
    evolve,
    evolve_closed,
    evolve_piecewise,
    hamiltonian_generator,
    standard_liouvillian,
    steady_state,
    trace_distance,
)
from .spectroscopy import (
    PeakReport,
    Spectrum,
    absorption_spectrum,
    absorption_spectrum_analytic,
    correlation_function,
    default_frequency_grid,
    find_peaks,
)
from .perturbation import (
    DriveCoefficients,
    PerturbationReport,
    corrected_states,
    drive_coefficients,
    match_exact_energies,
    perturbation_report,
    perturbed_ket,
    second_order_energies,
    unperturbed_energies,
)
from .protocols import (
    EffectiveModel,
    OrderParameterPoint,
    RampSchedule,
    analytic_variance,
    coherence,
    driven_oscillation_run,
    effective_model,
    extract_period,
    hopping_interchange_probe,
    mechanism_table,
    numeric_variance,
    order_parameter,
    ramp_experiment,
)
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .selfcheck import run_selfcheck, selfcheck_report
