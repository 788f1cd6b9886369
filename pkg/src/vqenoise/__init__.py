"""Noisy VQE training with exact noise-to-observable rewriting.

The package simulates density-matrix VQE on a few qubits, models
coherent, incoherent (Kraus) and control noise attached to circuit
layers, rewrites that noise exactly as perturbations of the measured
observable, and runs the robustness sweeps that exhibit the linear
scaling of the optimum displacement with the perturbation level.
"""

from .core import (
    ValidationError,
    basis_state,
    commutator,
    expectation,
    ground_energy,
    hermitian_exp,
    hilbert_dim,
    hs_inner,
    pauli_basis,
    pauli_on,
    pauli_string,
    plus_state,
    random_hermitian,
    require_density_matrix,
    require_hermitian,
    require_unitary,
)
from .ansatz import (
    Circuit,
    ProductLayer,
    SUNLayer,
    apply,
    build_hardware_efficient,
    build_locally_surjective,
    build_qaoa,
    build_sun,
    build_z_only,
    gell_mann_basis,
    is_locally_surjective_at,
    local_surjectivity_rank,
    omega,
    omegas,
    split_product_layers,
    unitary,
)
from .noise import (
    CoherentError,
    ControlErrorSpec,
    GeneralKrausChannel,
    KrausChannel,
    NoiseModel,
    amplitude_damping_channel,
    apply_channel,
    bit_flip_channel,
    bit_flip_prob_for_epsilon,
    control_error_cost_map,
    depolarizing_channel,
    noisy_apply,
    phase_flip_channel,
    splice_coherent_errors,
)
from .equivalence import (
    PerturbedObservableForm,
    PushedChannel,
    PushedCoherentError,
    apply_pushed_coherent,
    first_order_cost,
    first_order_observable,
    incoherent_to_observable,
    noise_to_observable_form,
    perturbation_level_for_depth,
    push_channel_to_last,
    push_coherent_to_last,
    suffix_unitary,
)
from .engine import (
    OptimizerConfig,
    TrainingDivergedError,
    TrainingTrace,
    VQEProblem,
    cost,
    fd_gradient,
    gradient,
    save_trace,
    train,
)
from .experiments import (
    CSV_HEADER,
    SlopeFit,
    SweepConfig,
    SweepRecord,
    acceptance_sweep_config,
    fit_loglog_slope,
    initial_theta,
    log_spaced_epsilons,
    make_qaoa_maxcut,
    make_random_vqe,
    make_single_qubit_cosine,
    full_scale_sweep_config,
    run_sweep,
    write_sweep_csv,
)
from .verify import VerifyReport, verify_all

__version__ = "0.1.0"
