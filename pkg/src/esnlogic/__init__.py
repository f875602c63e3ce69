"""Randomized recurrent networks computing digital logic.

Build a random reservoir, train linear readouts for Boolean targets by
ridge regression, and measure how often a random device learns a gate
perfectly: the yield view of computing with self-assembled hardware.
Includes temporal weight noise, permanent node faults, and a teacher
that detects faults through an auxiliary channel and retrains.
"""

from .harness import (
    ADDER_MULTIPLIER_TASK_NAME,
    ADDER_MULTIPLIER_TRIALS,
    DEFAULT_TRIALS,
    SWEEP_CSV_COLUMNS,
    ReadoutParams,
    SweepConfig,
    SweepResult,
    TrialMetrics,
    adder_multiplier_streams,
    cell_params,
    estimate_probabilities,
    run_adder_multiplier,
    run_streams_trial,
    run_streams_trial_artifacts,
    run_trial,
    run_trial_artifacts,
    sweep,
    sweep_to_csv,
    trial_seed_for,
)
from .perturbation import (
    DEFAULT_NOISE_ENTRIES,
    DEFAULT_NOISE_STD,
    FaultEvent,
    VariationModel,
    apply_fault,
    draw_fault,
    noisy_weights,
    variation_stepper,
)
from .readout import (
    DEFAULT_DELAY,
    DEFAULT_RIDGE,
    DEFAULT_THRESHOLD,
    Readout,
    RegressionProblem,
    RidgeSign,
    SingularRegressionError,
    aligned_pairs,
    draw_visible_mask,
    expand_visible,
    predict,
    predict_bits,
    threshold_bits,
    train,
)
from .reservoir import (
    DEFAULT_WASHOUT,
    DegenerateReservoirError,
    Network,
    NetworkConfig,
    SpectralEstimate,
    StateTrajectory,
    Transfer,
    WeightPattern,
    build_network,
    estimate_spectral_radius,
    run,
    spectral_radius,
    step,
    transfer_apply,
)
from .serialize import (
    format_float,
    load_network,
    network_from_json,
    network_to_json,
    save_network,
)
from .tasks import (
    ARITHMETIC_INPUT_LINES,
    MAX_GATE_ARITY,
    MIN_GATE_ARITY,
    SIX_GATES,
    BitStreams,
    TaskKind,
    TaskSpec,
    compute_targets,
    evaluate_accuracy,
    generate_streams,
    n_input_lines,
    n_output_bits,
    streams_to_csv,
)
from .teacher import (
    DEFAULT_DEBOUNCE,
    RecoveryConfig,
    RecoveryRecord,
    RecoveryStats,
    Teacher,
    TeacherMemory,
    TeacherMode,
    TeacherState,
    monitor_step,
    recovery_to_csv,
    resume,
    retrain,
    run_recovery_experiment,
    run_recovery_repeat,
)

__version__ = "0.1.0"
