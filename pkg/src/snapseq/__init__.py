"""snapseq: synthesis of short SNAP-gate/displacement sequences.

Given a target isometry on a truncated Fock space, the package builds a gate
sequence in two stages: greedy hierarchical insertion of displacement-framed
SNAP building blocks, followed by exact-gradient co-optimization of all
control parameters against a fidelity-plus-photon-number cost.
"""

from .finetuner import (
    AdamState,
    GradientWorkspace,
    NumericAbort,
    TrainConfig,
    TrainRecord,
    TrainTrace,
    adam_step,
    clip,
    cost_gradient,
    finetune,
    gradient_workspace,
    overlap_gradient,
    photon_gradient,
)
from .initializer import (
    DEFAULT_ALPHA_GRID,
    InitConfig,
    InitTrace,
    g_vector,
    initialize,
    insertion_order,
    optimal_block,
)
from .jobs import (
    ConfigError,
    JobSpec,
    default_lambda,
    evaluate_sequence,
    evaluate_sequence_file,
    job_from_dict,
    run_job,
    run_sweep,
    target_from_descriptor,
)
from .linalg import (
    apply_block,
    apply_block_dagger,
    apply_displacement,
    build_block,
    build_displacement,
    build_snap,
    coherent_amplitudes,
    fock_state,
    hs_inner,
    reliable_dim,
    trace_norm,
    wigner_grid,
    wrap_phases,
)
from .objectives import ObjectiveReport, fidelity, non_leakage, photon_numbers, total_cost
from .sequences import (
    BlockSequence,
    NativeSequence,
    apply_sequence,
    from_native,
    sequence_from_dict,
    sequence_to_dict,
    to_native,
)
from .targets import (
    HADAMARD,
    ODD_SUPERPOSITION,
    PAULI_X,
    PAULI_Y,
    SQRT_PAULI_X,
    TargetOperation,
    binomial_codewords,
    decayed_syndrome_state,
    fock_subspace_unitary,
    logical_op_target,
    random_permutation,
    random_unitary,
    recovery_target,
    state_prep_target,
    trivial_codewords,
)

__version__ = "0.1.0"
