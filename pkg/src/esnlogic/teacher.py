"""Fault monitoring and retraining around a fixed network.

The teacher watches one auxiliary output channel whose expected bits it
knows (it supplies the auxiliary input stream itself, as a cyclic replay
of a stored stream).  A thresholded mismatch declares a fault; the
teacher then takes the system offline, drives the stored streams through
the damaged network, and re-solves every readout channel against the
stored targets.  The reservoir itself is never modified: recovery works
purely by re-mapping the readout layer to whatever dynamics survive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from .perturbation import VariationModel, apply_fault, draw_fault, noisy_weights
from .readout import DEFAULT_RIDGE, DEFAULT_THRESHOLD, Readout, RidgeSign, predict_bits, train
from .reservoir import DEFAULT_WASHOUT, Network, NetworkConfig, build_network, run, step
from .tasks import TaskKind, compute_targets, evaluate_accuracy

DEFAULT_DEBOUNCE = 1


class TeacherMode(str, Enum):
    MONITORING = "monitoring"
    FAULTED = "faulted"
    RETRAINING = "retraining"
    RESTORED = "restored"


@dataclass
class TeacherMemory:
    """Stored input/target pairs and which terminals belong to the teacher.

    stored_inputs is the full T x (main + aux) input bit matrix used for
    training; stored_targets the matching T x (main + aux) target bits.
    The index tuples say which input columns and which target channels
    are the auxiliary ones (all remaining columns are main).
    """

    stored_inputs: np.ndarray
    stored_targets: np.ndarray
    aux_input_indices: Tuple[int, ...]
    aux_output_indices: Tuple[int, ...]

    def __post_init__(self):
        self.stored_inputs = np.asarray(self.stored_inputs, dtype=int)
        self.stored_targets = np.asarray(self.stored_targets, dtype=int)
        if self.stored_targets.ndim == 1:
            self.stored_targets = self.stored_targets[:, None]
        if self.stored_inputs.shape[0] != self.stored_targets.shape[0]:
            raise ValueError(
                f"stored streams disagree on length: {self.stored_inputs.shape[0]} inputs "
                f"vs {self.stored_targets.shape[0]} targets"
            )
        self.aux_input_indices = tuple(int(i) for i in self.aux_input_indices)
        self.aux_output_indices = tuple(int(i) for i in self.aux_output_indices)
        for idx in self.aux_input_indices:
            if not 0 <= idx < self.stored_inputs.shape[1]:
                raise ValueError(f"aux input column {idx} out of range")
        for idx in self.aux_output_indices:
            if not 0 <= idx < self.stored_targets.shape[1]:
                raise ValueError(f"aux output channel {idx} out of range")

    @property
    def n_steps(self) -> int:
        return self.stored_inputs.shape[0]

    @property
    def main_input_indices(self) -> Tuple[int, ...]:
        aux = set(self.aux_input_indices)
        return tuple(i for i in range(self.stored_inputs.shape[1]) if i not in aux)

    @property
    def main_output_indices(self) -> Tuple[int, ...]:
        aux = set(self.aux_output_indices)
        return tuple(i for i in range(self.stored_targets.shape[1]) if i not in aux)

    def aux_input_at(self, t: int) -> np.ndarray:
        """Cyclic replay of the stored auxiliary input columns."""
        return self.stored_inputs[t % self.n_steps, list(self.aux_input_indices)]

    def aux_expected_at(self, t: int) -> np.ndarray:
        return self.stored_targets[t % self.n_steps, list(self.aux_output_indices)]


@dataclass
class TeacherState:
    mode: TeacherMode = TeacherMode.MONITORING
    mismatch_log: List[Tuple[int, int, int]] = field(default_factory=list)
    retrain_count: int = 0


@dataclass
class Teacher:
    """Memory plus monitoring state, with a configurable debounce window.

    Any `debounce` consecutive mismatching steps declare a fault; the
    default of 1 means a single thresholded mismatch triggers.
    """

    memory: TeacherMemory
    state: TeacherState = field(default_factory=TeacherState)
    debounce: int = DEFAULT_DEBOUNCE
    _streak: int = field(default=0, repr=False)

    def __post_init__(self):
        if self.debounce < 1:
            raise ValueError(f"debounce must be at least 1, got {self.debounce}")


def monitor_step(teacher: Teacher, aux_observed_bit: int, aux_expected_bit: int, t: int) -> TeacherState:
    """Compare one auxiliary bit against its expectation.

    On a match the state is unchanged.  On a mismatch the triple
    (t, expected, observed) is logged and, once `debounce` consecutive
    steps have mismatched, the mode flips to Faulted.  Must be called
    while Monitoring.
    """
    st = teacher.state
    if st.mode is not TeacherMode.MONITORING:
        raise RuntimeError(f"monitor_step requires Monitoring mode, teacher is {st.mode.value}")
    if int(aux_observed_bit) == int(aux_expected_bit):
        teacher._streak = 0
        return st
    st.mismatch_log.append((int(t), int(aux_expected_bit), int(aux_observed_bit)))
    teacher._streak += 1
    if teacher._streak >= teacher.debounce:
        st.mode = TeacherMode.FAULTED
        teacher._streak = 0
    return st


def retrain(
    teacher: Teacher,
    net: Network,
    gamma: float = DEFAULT_RIDGE,
    mask: Optional[np.ndarray] = None,
    sign_mode: RidgeSign = RidgeSign.STANDARD,
    washout: int = DEFAULT_WASHOUT,
    weights_for_step=None,
) -> Readout:
    """Re-fit every readout channel on the network as it now is.

    Drives the stored input stream through the (possibly damaged)
    network from a zeroed state, rebuilds the trajectory with the
    standard washout, and solves the regression for ALL stored target
    channels, main and auxiliary alike.  Returns the replacement readout
    bank and moves the teacher to Restored.  The network's weights are
    never touched.  A regression failure propagates and leaves the mode
    at Faulted.
    """
    st = teacher.state
    if st.mode is not TeacherMode.FAULTED:
        raise RuntimeError(f"retrain requires Faulted mode, teacher is {st.mode.value}")
    st.mode = TeacherMode.RETRAINING
    try:
        trajectory = run(net, teacher.memory.stored_inputs, washout=washout,
                         weights_for_step=weights_for_step)
        bank = train(trajectory, teacher.memory.stored_targets, gamma=gamma,
                     sign=sign_mode, visible_mask=mask)
    except Exception:
        st.mode = TeacherMode.FAULTED
        raise
    st.mode = TeacherMode.RESTORED
    st.retrain_count += 1
    return bank


def resume(teacher: Teacher) -> TeacherState:
    """Close the cycle: Restored back to Monitoring."""
    st = teacher.state
    if st.mode is not TeacherMode.RESTORED:
        raise RuntimeError(f"resume requires Restored mode, teacher is {st.mode.value}")
    st.mode = TeacherMode.MONITORING
    teacher._streak = 0
    return st


@dataclass
class RecoveryConfig:
    """Operating point of the fault-recovery experiment.

    Two NAND-2 gates share one reservoir: a main gate on input lines
    0-1 and the teacher's auxiliary gate on lines 2-3.  The readout sees
    every node (full output density) so a victim is never structurally
    invisible; detection rates reported under this config are therefore
    the model's best case.  Temporal weight noise defaults on, matching
    normal operating conditions.
    """

    n_nodes: int = 100
    n_steps: int = 1000
    t_fail: int = 700
    washout: int = DEFAULT_WASHOUT
    input_scale: float = 1.0
    spectral_radius: float = 0.1
    input_density: float = 0.5
    output_density: float = 1.0
    gamma: float = DEFAULT_RIDGE
    theta: float = DEFAULT_THRESHOLD
    sign: RidgeSign = RidgeSign.STANDARD
    debounce: int = DEFAULT_DEBOUNCE
    variation: Optional[VariationModel] = VariationModel()
    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.t_fail < self.n_steps:
            raise ValueError(
                f"t_fail must lie in [0, {self.n_steps}), got {self.t_fail}"
            )


@dataclass
class RecoveryRecord:
    """One repeat of the recovery experiment."""

    m: int
    repeat: int
    detected: bool
    detect_latency_steps: Optional[int]
    post_retrain_accuracy: float
    false_alarms: int = 0

    @property
    def post_retrain_perfect(self) -> bool:
        return self.post_retrain_accuracy == 1.0


@dataclass
class RecoveryStats:
    """Aggregate over repeats at one fault size."""

    m: int
    records: List[RecoveryRecord]

    @property
    def detection_rate(self) -> float:
        return float(np.mean([r.detected for r in self.records]))

    @property
    def post_retrain_lp(self) -> float:
        return float(np.mean([r.post_retrain_perfect for r in self.records]))


def _nand_pair_targets(bits: np.ndarray) -> np.ndarray:
    main = compute_targets(TaskKind.NAND, bits[:, :2])
    aux = compute_targets(TaskKind.NAND, bits[:, 2:])
    return np.hstack([main, aux])


def run_recovery_repeat(config: RecoveryConfig, m: int, repeat: int) -> RecoveryRecord:
    """Build, train, monitor, fault, detect, retrain, and re-measure once.

    The monitored stream carries fresh random bits on the main lines and
    the cyclic stored replay on the auxiliary lines.  A mismatch before
    t_fail counts as a false alarm, not a detection; the teacher resumes
    monitoring.  Whether or not the fault is detected, the retrain is
    performed afterwards so the post-retrain accuracy column is always
    meaningful.  Post-retrain accuracy is measured on a fresh main
    stream.
    """
    seeds = np.random.SeedSequence((config.master_seed, m, repeat)).generate_state(8, dtype=np.uint64)
    (s_net, s_stored, s_var_train, s_main, s_vic,
     s_var_mon, s_var_retrain, s_eval) = (int(s) for s in seeds)

    net_config = NetworkConfig(
        n_nodes=config.n_nodes, n_inputs=4, n_outputs=2,
        input_scale=config.input_scale, spectral_radius=config.spectral_radius,
        input_density=config.input_density, output_density=config.output_density,
        seed=s_net,
    )
    net = build_network(net_config)
    T = config.n_steps

    stored_inputs = (np.random.default_rng(s_stored).random((T, 4)) < 0.5).astype(int)
    stored_targets = _nand_pair_targets(stored_inputs)
    memory = TeacherMemory(stored_inputs, stored_targets,
                           aux_input_indices=(2, 3), aux_output_indices=(1,))
    teacher = Teacher(memory=memory, debounce=config.debounce)

    def variation_fn(base: np.ndarray, phase_seed: int):
        if config.variation is None:
            return None
        model = VariationModel(n=config.variation.n, sigma=config.variation.sigma,
                               seed=phase_seed)
        return lambda t: noisy_weights(base, model, t)

    trajectory = run(net, stored_inputs, washout=config.washout,
                     weights_for_step=variation_fn(net.w_res, s_var_train))
    bank = train(trajectory, stored_targets, theta=config.theta, gamma=config.gamma,
                 sign=config.sign)

    main_bits = (np.random.default_rng(s_main).random((T, 2)) < 0.5).astype(int)
    event = draw_fault(m, config.t_fail, config.n_nodes, s_vic)
    mon_model = (VariationModel(n=config.variation.n, sigma=config.variation.sigma,
                                seed=s_var_mon)
                 if config.variation is not None else None)

    net.state = np.zeros(config.n_nodes)
    detected_at: Optional[int] = None
    false_alarms = 0
    aux_w = bank.w_out[1]
    for t in range(T):
        if t == event.t_fail and m > 0:
            apply_fault(net, event)
        u = np.concatenate([main_bits[t], memory.aux_input_at(t)])
        w_t = noisy_weights(net.w_res, mon_model, t) if mon_model is not None else None
        x = step(net, u, w_res=w_t)
        if t < config.washout:
            continue
        observed = int(np.concatenate([x, [1.0]]) @ aux_w >= bank.theta)
        expected = int(memory.aux_expected_at(t)[0])
        state = monitor_step(teacher, observed, expected, t)
        if state.mode is TeacherMode.FAULTED:
            if t >= event.t_fail and m > 0:
                detected_at = t
                break
            # mismatch with no fault present yet: spurious alarm, resume
            false_alarms += 1
            state.mode = TeacherMode.MONITORING

    detected = detected_at is not None
    # an undetected fault still gets retrained so the recovery column is
    # comparable across repeats; mark the teacher faulted by hand
    teacher.state.mode = TeacherMode.FAULTED
    bank2 = retrain(teacher, net, gamma=config.gamma, sign_mode=config.sign,
                    washout=config.washout,
                    weights_for_step=variation_fn(net.w_res, s_var_retrain))

    eval_main = (np.random.default_rng(s_eval).random((T, 2)) < 0.5).astype(int)
    eval_inputs = np.hstack([eval_main, stored_inputs[:, 2:]])
    eval_targets = compute_targets(TaskKind.NAND, eval_main)
    eval_traj = run(net, eval_inputs, washout=config.washout)
    bits, indices = predict_bits(bank2, eval_traj, T)
    accuracy = evaluate_accuracy(bits[:, 0], eval_targets[indices, 0])

    return RecoveryRecord(
        m=m, repeat=repeat, detected=detected,
        detect_latency_steps=(detected_at - event.t_fail) if detected else None,
        post_retrain_accuracy=accuracy, false_alarms=false_alarms,
    )


def run_recovery_experiment(config: RecoveryConfig, m: int, repeats: int) -> RecoveryStats:
    """Repeat the fault-inject/detect/retrain cycle and aggregate."""
    records = [run_recovery_repeat(config, m, r) for r in range(repeats)]
    return RecoveryStats(m=m, records=records)


def recovery_to_csv(stats_list: List[RecoveryStats], path) -> None:
    """One row per repeat, in experiment order."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["m", "repeat", "detected", "detect_latency_steps",
                         "post_retrain_accuracy", "post_retrain_perfect"])
        for stats in stats_list:
            for r in stats.records:
                writer.writerow([
                    r.m, r.repeat, int(r.detected),
                    "" if r.detect_latency_steps is None else r.detect_latency_steps,
                    format(r.post_retrain_accuracy, ".17g"), int(r.post_retrain_perfect),
                ])
