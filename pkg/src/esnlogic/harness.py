"""Monte-Carlo trial runner, grid sweeps, and yield statistics.

A trial builds one random network, trains its readouts on one stream,
and scores training accuracy on the training trajectory and
generalization accuracy on an independent test stream.  Yield statistics
over many trials use floor semantics: a trial counts only when its
accuracy is exactly 1.  Everything is deterministic in a master seed,
with per-trial streams split counter-style from (master seed, cell
index, trial index) so results never depend on execution order and
adding grid cells never perturbs existing ones.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .perturbation import VariationModel, noisy_weights
from .readout import (
    DEFAULT_DELAY,
    DEFAULT_RIDGE,
    DEFAULT_THRESHOLD,
    RidgeSign,
    draw_visible_mask,
    predict_bits,
    train,
)
from .reservoir import DEFAULT_WASHOUT, NetworkConfig, Transfer, WeightPattern, build_network, run
from .tasks import (
    BitStreams,
    TaskKind,
    TaskSpec,
    compute_targets,
    evaluate_accuracy,
    generate_streams,
    n_output_bits,
)

DEFAULT_TRIALS = 100
ADDER_MULTIPLIER_TRIALS = 500
ADDER_MULTIPLIER_TASK_NAME = "adder2+multiplier2"

SWEEP_CSV_COLUMNS = (
    "task", "k", "N", "weight_pattern", "transfer", "v", "lambda",
    "delta_i", "delta_r", "delta_o", "gamma", "tau", "sigma", "n_noise",
    "trials", "TP", "GP", "LP_joint", "LP_product", "master_seed",
)


@dataclass(frozen=True)
class ReadoutParams:
    """Training-side knobs of a trial."""

    tau: int = DEFAULT_DELAY
    theta: float = DEFAULT_THRESHOLD
    gamma: float = DEFAULT_RIDGE
    sign: RidgeSign = RidgeSign.STANDARD
    washout: int = DEFAULT_WASHOUT


@dataclass(frozen=True)
class TrialMetrics:
    """Accuracies of one trial; `seed` reproduces it exactly."""

    tr: float
    gr: float
    seed: int

    def __post_init__(self):
        for name, value in (("tr", self.tr), ("gr", self.gr)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass
class SweepResult:
    """Yield estimates for one parameter cell.

    params carries the resolved cell parameters (every sweep CSV column
    that is not a statistic).  LP is reported two ways: lp_joint is the
    fraction of trials perfect on BOTH streams (the operational yield),
    lp_product is TP*GP, which treats the two events as independent.
    """

    params: Dict[str, object]
    tp: float
    gp: float
    lp_joint: float
    lp_product: float
    trials: int

    def __post_init__(self):
        for name in ("tp", "gp", "lp_joint", "lp_product"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.lp_joint > min(self.tp, self.gp) + 1e-12:
            raise ValueError(
                f"lp_joint {self.lp_joint} exceeds min(TP, GP) = {min(self.tp, self.gp)}"
            )


def _variation_stepper(base: np.ndarray, variation: Optional[VariationModel], phase_seed: int):
    if variation is None or variation.sigma == 0.0 or variation.n == 0:
        return None
    model = VariationModel(n=variation.n, sigma=variation.sigma, seed=phase_seed)
    return lambda t: noisy_weights(base, model, t)


def run_streams_trial_artifacts(
    net_config: NetworkConfig,
    train_streams: BitStreams,
    test_streams: BitStreams,
    readout_params: ReadoutParams = ReadoutParams(),
    variation: Optional[VariationModel] = None,
    trial_seed: int = 0,
    mask_seed: Optional[int] = None,
    variation_seeds: Tuple[int, int] = (0, 1),
):
    """Train and score one network on explicit bit streams.

    The generic core behind run_trial: callers that stack targets from
    several tasks onto one input stream come through here.  `variation`
    supplies n and sigma only; its phases are re-seeded per call from
    variation_seeds so that the training and testing runs see
    independent noise.  tr is scored on the training trajectory itself,
    gr on the test stream.  Returns (network, readout, metrics).
    """
    net = build_network(net_config)
    mask_rng = np.random.default_rng(trial_seed if mask_seed is None else mask_seed)
    mask = draw_visible_mask(net_config.n_nodes, net_config.output_density, mask_rng)

    p = readout_params
    traj_train = run(net, train_streams.inputs, washout=p.washout,
                     weights_for_step=_variation_stepper(net.w_res, variation, variation_seeds[0]))
    readout = train(traj_train, train_streams.targets, tau=p.tau, theta=p.theta,
                    gamma=p.gamma, sign=p.sign, visible_mask=mask)

    n_train = train_streams.targets.shape[0]
    bits, indices = predict_bits(readout, traj_train, n_train)
    tr = evaluate_accuracy(bits, train_streams.targets[indices])

    traj_test = run(net, test_streams.inputs, washout=p.washout,
                    weights_for_step=_variation_stepper(net.w_res, variation, variation_seeds[1]))
    n_test = test_streams.targets.shape[0]
    bits, indices = predict_bits(readout, traj_test, n_test)
    gr = evaluate_accuracy(bits, test_streams.targets[indices])

    return net, readout, TrialMetrics(tr=tr, gr=gr, seed=trial_seed)


def run_streams_trial(
    net_config: NetworkConfig,
    train_streams: BitStreams,
    test_streams: BitStreams,
    readout_params: ReadoutParams = ReadoutParams(),
    variation: Optional[VariationModel] = None,
    trial_seed: int = 0,
    mask_seed: Optional[int] = None,
    variation_seeds: Tuple[int, int] = (0, 1),
) -> TrialMetrics:
    """run_streams_trial_artifacts, keeping only the metrics."""
    return run_streams_trial_artifacts(
        net_config, train_streams, test_streams, readout_params, variation,
        trial_seed, mask_seed, variation_seeds,
    )[2]


def run_trial_artifacts(
    net_config: NetworkConfig,
    task_spec: TaskSpec,
    readout_params: ReadoutParams = ReadoutParams(),
    variation: Optional[VariationModel] = None,
):
    """One complete yield trial for a task, returning the trained pieces.

    net_config.seed is the trial seed: network build, the two streams,
    the readout mask, and both noise phases are all split from it.  The
    config's line counts are overridden to match the task.  Returns
    (network, readout, metrics).
    """
    trial_seed = net_config.seed
    children = np.random.SeedSequence(trial_seed).generate_state(6, dtype=np.uint64)
    s_net, s_train, s_test, s_mask, s_var_train, s_var_test = (int(s) for s in children)

    net_config = replace(
        net_config, n_inputs=task_spec.n_lines,
        n_outputs=n_output_bits(task_spec.kind), seed=s_net,
    )
    train_streams = generate_streams(replace(task_spec, seed=s_train))
    test_streams = generate_streams(replace(task_spec, seed=s_test))
    return run_streams_trial_artifacts(
        net_config, train_streams, test_streams, readout_params, variation,
        trial_seed=trial_seed, mask_seed=s_mask, variation_seeds=(s_var_train, s_var_test),
    )


def run_trial(
    net_config: NetworkConfig,
    task_spec: TaskSpec,
    readout_params: ReadoutParams = ReadoutParams(),
    variation: Optional[VariationModel] = None,
) -> TrialMetrics:
    """run_trial_artifacts, keeping only the metrics."""
    return run_trial_artifacts(net_config, task_spec, readout_params, variation)[2]


def estimate_probabilities(
    metrics: Sequence[TrialMetrics], params: Optional[Dict[str, object]] = None
) -> SweepResult:
    """Yield statistics over trials with floor semantics.

    TP is the fraction of trials with tr exactly 1, GP likewise for gr;
    anything below 1 counts as zero.  Raises on an empty list.
    """
    if len(metrics) == 0:
        raise ValueError("cannot estimate probabilities from zero trials")
    tr_perfect = np.array([m.tr == 1.0 for m in metrics])
    gr_perfect = np.array([m.gr == 1.0 for m in metrics])
    tp = float(tr_perfect.mean())
    gp = float(gr_perfect.mean())
    return SweepResult(
        params=dict(params or {}), tp=tp, gp=gp,
        lp_joint=float((tr_perfect & gr_perfect).mean()),
        lp_product=tp * gp, trials=len(metrics),
    )


@dataclass
class SweepConfig:
    """Base point of a sweep; axes override fields per cell."""

    net: NetworkConfig = field(default_factory=NetworkConfig)
    task: TaskSpec = field(default_factory=lambda: TaskSpec(kind=TaskKind.NAND, k=5))
    readout: ReadoutParams = ReadoutParams()
    variation: Optional[VariationModel] = VariationModel()
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0


def _apply_axis(net: NetworkConfig, task: TaskSpec, params: ReadoutParams,
                variation: Optional[VariationModel], name: str, value):
    if name == "v":
        net = replace(net, input_scale=float(value))
    elif name == "lambda":
        net = replace(net, spectral_radius=float(value))
    elif name == "delta_i":
        net = replace(net, input_density=float(value))
    elif name == "delta_r":
        net = replace(net, reservoir_density=float(value))
    elif name == "delta_o":
        net = replace(net, output_density=float(value))
    elif name == "N":
        net = replace(net, n_nodes=int(value))
    elif name == "weight_pattern":
        net = replace(net, weight_pattern=WeightPattern(value))
    elif name == "transfer":
        net = replace(net, transfer=Transfer(value))
    elif name == "task":
        task = replace(task, kind=TaskKind(value))
    elif name == "k":
        task = replace(task, k=int(value))
    elif name == "T":
        task = replace(task, n_steps=int(value))
    elif name == "gamma":
        params = replace(params, gamma=float(value))
    elif name == "tau":
        params = replace(params, tau=int(value))
    elif name == "theta":
        params = replace(params, theta=float(value))
    elif name == "sigma":
        base = variation or VariationModel()
        variation = VariationModel(n=base.n, sigma=float(value), seed=base.seed)
    elif name == "n_noise":
        base = variation or VariationModel()
        variation = VariationModel(n=int(value), sigma=base.sigma, seed=base.seed)
    else:
        raise ValueError(f"unknown sweep axis {name!r}")
    return net, task, params, variation


def cell_params(net: NetworkConfig, task: TaskSpec, params: ReadoutParams,
                variation: Optional[VariationModel], trials: int, master_seed: int,
                task_name: Optional[str] = None) -> Dict[str, object]:
    """Resolved cell parameters keyed by sweep CSV column names."""
    return {
        "task": task_name if task_name is not None else task.kind.value,
        "k": task.k, "N": net.n_nodes,
        "weight_pattern": net.weight_pattern.value, "transfer": net.transfer.value,
        "v": net.input_scale, "lambda": net.spectral_radius,
        "delta_i": net.input_density, "delta_r": net.reservoir_density,
        "delta_o": net.output_density,
        "gamma": params.gamma, "tau": params.tau,
        "sigma": variation.sigma if variation is not None else 0.0,
        "n_noise": variation.n if variation is not None else 0,
        "trials": trials, "master_seed": master_seed,
    }


def trial_seed_for(master_seed: int, cell_index: int, trial_index: int) -> int:
    """Counter-based split: one independent seed per (cell, trial)."""
    state = np.random.SeedSequence((master_seed, cell_index, trial_index))
    return int(state.generate_state(1, dtype=np.uint64)[0])


def sweep(config: SweepConfig, axes: Mapping[str, Sequence]) -> List[SweepResult]:
    """Run a full factorial grid and estimate yield per cell.

    `axes` maps axis names (v, lambda, delta_i, delta_r, delta_o, N, k,
    task, T, gamma, tau, theta, sigma, n_noise, weight_pattern,
    transfer) to value lists; cells enumerate in row-major order over
    the axes as given.  Results are deterministic in
    config.master_seed and independent of execution order.
    """
    if not axes or any(len(v) == 0 for v in axes.values()):
        raise ValueError("sweep requires at least one axis with at least one value")
    names = list(axes.keys())
    results = []
    for cell_index, values in enumerate(itertools.product(*(axes[n] for n in names))):
        net, task, params, variation = config.net, config.task, config.readout, config.variation
        for name, value in zip(names, values):
            net, task, params, variation = _apply_axis(net, task, params, variation, name, value)
        metrics = []
        for trial_index in range(config.trials):
            seed = trial_seed_for(config.master_seed, cell_index, trial_index)
            metrics.append(run_trial(replace(net, seed=seed), task, params, variation))
        results.append(estimate_probabilities(
            metrics, cell_params(net, task, params, variation, config.trials, config.master_seed),
        ))
    return results


def adder_multiplier_streams(n_steps: int, p_one: float, seed: int) -> BitStreams:
    """One 4-line operand stream with stacked adder and multiplier targets.

    Operand bits arrive on 4 parallel input lines; the 7 target bits are
    the 3-bit sum followed by the 4-bit product, trained jointly.
    """
    rng = np.random.default_rng(seed)
    inputs = (rng.random((n_steps, 4)) < p_one).astype(int)
    targets = np.hstack([
        compute_targets(TaskKind.ADDER2, inputs),
        compute_targets(TaskKind.MULTIPLIER2, inputs),
    ])
    return BitStreams(inputs=inputs, targets=targets)


def run_adder_multiplier(
    trials: int = ADDER_MULTIPLIER_TRIALS,
    net_config: Optional[NetworkConfig] = None,
    readout_params: ReadoutParams = ReadoutParams(),
    variation: Optional[VariationModel] = VariationModel(),
    n_steps: int = 1000,
    p_one: float = 0.5,
    master_seed: int = 0,
) -> SweepResult:
    """Joint 2-bit adder and multiplier yield on a shared reservoir.

    A trial is perfect only when all 7 output bits are right at every
    aligned step of a stream.  Raises on zero trials.
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    base = net_config if net_config is not None else NetworkConfig()
    base = replace(base, n_inputs=4, n_outputs=7)
    metrics = []
    for trial_index in range(trials):
        trial_seed = trial_seed_for(master_seed, 0, trial_index)
        children = np.random.SeedSequence(trial_seed).generate_state(6, dtype=np.uint64)
        s_net, s_train, s_test, s_mask, s_var_train, s_var_test = (int(s) for s in children)
        metrics.append(run_streams_trial(
            replace(base, seed=s_net),
            adder_multiplier_streams(n_steps, p_one, s_train),
            adder_multiplier_streams(n_steps, p_one, s_test),
            readout_params, variation, trial_seed=trial_seed, mask_seed=s_mask,
            variation_seeds=(s_var_train, s_var_test),
        ))
    task = TaskSpec(kind=TaskKind.ADDER2, n_steps=n_steps, p_one=p_one)
    return estimate_probabilities(metrics, cell_params(
        base, task, readout_params, variation, trials, master_seed,
        task_name=ADDER_MULTIPLIER_TASK_NAME,
    ))


def sweep_to_csv(results: Sequence[SweepResult], path) -> None:
    """Write sweep results with the canonical column set, one row per cell."""
    def fmt(value):
        if isinstance(value, float):
            return format(value, ".17g")
        return value

    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SWEEP_CSV_COLUMNS)
        for result in results:
            row = dict(result.params)
            row.update(TP=result.tp, GP=result.gp, LP_joint=result.lp_joint,
                       LP_product=result.lp_product, trials=result.trials)
            writer.writerow([fmt(row[c]) for c in SWEEP_CSV_COLUMNS])
