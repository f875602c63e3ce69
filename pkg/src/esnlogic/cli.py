"""Command-line experiment runner.

Five subcommands: `train` fits one network and dumps it as JSON,
`sweep` runs a parameter grid to CSV, `adder-mult` runs the joint
arithmetic experiment, `fault-sim` runs the fault-recovery experiment
to CSV, and `eval` replays a saved network on a bit stream.  Every
subcommand takes an optional JSON config file; command-line flags
override config keys of the same name ("lambda" in JSON is --lambda).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Dict, List, Optional

import numpy as np

from .harness import (
    ADDER_MULTIPLIER_TRIALS,
    DEFAULT_TRIALS,
    ReadoutParams,
    SweepConfig,
    run_adder_multiplier,
    run_trial_artifacts,
    sweep,
    sweep_to_csv,
)
from .perturbation import VariationModel
from .readout import (
    DEFAULT_DELAY,
    DEFAULT_RIDGE,
    DEFAULT_THRESHOLD,
    RidgeSign,
    predict_bits,
)
from .reservoir import DEFAULT_WASHOUT, NetworkConfig, Transfer, WeightPattern, run
from .serialize import load_network, save_network
from .tasks import TaskKind, TaskSpec, compute_targets, evaluate_accuracy
from .teacher import RecoveryConfig, recovery_to_csv, run_recovery_experiment

MODEL_KEYS = (
    "N", "v", "lambda", "delta_i", "delta_r", "delta_o",
    "weight_pattern", "transfer", "gamma", "tau", "theta", "sign",
    "sigma", "n_noise", "T", "p_one", "washout",
)


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("-N", "--n-nodes", dest="N", type=int, help="reservoir size")
    parser.add_argument("--v", type=float, help="input weight scale")
    parser.add_argument("--lambda", dest="lambda_", type=float, help="spectral radius")
    parser.add_argument("--delta-i", type=float, help="input connectivity fraction")
    parser.add_argument("--delta-r", type=float, help="recurrent connectivity fraction")
    parser.add_argument("--delta-o", type=float, help="readout visibility fraction")
    parser.add_argument("--weight-pattern", choices=[p.value for p in WeightPattern])
    parser.add_argument("--transfer", choices=[t.value for t in Transfer])
    parser.add_argument("--gamma", type=float, help="ridge regularization factor")
    parser.add_argument("--tau", type=int, help="output delay in steps")
    parser.add_argument("--theta", type=float, help="output threshold")
    parser.add_argument("--sign", choices=[s.value for s in RidgeSign],
                        help="ridge sign convention")
    parser.add_argument("--sigma", type=float, help="per-step weight noise std")
    parser.add_argument("--n-noise", type=int, help="entries perturbed per step")
    parser.add_argument("--steps", dest="T", type=int, help="stream length")
    parser.add_argument("--p-one", type=float, help="per-bit probability of 1")
    parser.add_argument("--washout", type=int, help="initial steps dropped")


def _settings(args: argparse.Namespace) -> Dict[str, object]:
    """Config file values overridden by any explicitly passed flags."""
    cfg: Dict[str, object] = {}
    if getattr(args, "config", None):
        with open(args.config) as handle:
            loaded = json.load(handle)
        if not isinstance(loaded, dict):
            raise SystemExit(f"config {args.config} must hold a JSON object")
        cfg.update(loaded)
    passed = vars(args)
    for key in MODEL_KEYS:
        attr = "lambda_" if key == "lambda" else key
        value = passed.get(attr)
        if value is not None:
            cfg[key] = value
    for key in ("task", "k", "trials", "master_seed", "seed", "axes",
                "m", "t_fail", "repeats"):
        value = passed.get(key)
        if value is not None:
            cfg[key] = value
    return cfg


def _net_config(cfg: Dict[str, object], seed: int = 0) -> NetworkConfig:
    return NetworkConfig(
        n_nodes=int(cfg.get("N", 100)),
        input_scale=float(cfg.get("v", 1.0)),
        spectral_radius=float(cfg.get("lambda", 0.1)),
        input_density=float(cfg.get("delta_i", 0.5)),
        reservoir_density=float(cfg.get("delta_r", 1.0)),
        output_density=float(cfg.get("delta_o", 0.5)),
        weight_pattern=WeightPattern(cfg.get("weight_pattern", "normal")),
        transfer=Transfer(cfg.get("transfer", "sat_linear")),
        seed=seed,
    )


def _readout_params(cfg: Dict[str, object]) -> ReadoutParams:
    return ReadoutParams(
        tau=int(cfg.get("tau", DEFAULT_DELAY)),
        theta=float(cfg.get("theta", DEFAULT_THRESHOLD)),
        gamma=float(cfg.get("gamma", DEFAULT_RIDGE)),
        sign=RidgeSign(cfg.get("sign", "standard")),
        washout=int(cfg.get("washout", DEFAULT_WASHOUT)),
    )


def _variation(cfg: Dict[str, object]) -> Optional[VariationModel]:
    sigma = float(cfg.get("sigma", 0.1))
    n = int(cfg.get("n_noise", 1))
    if sigma == 0.0 or n == 0:
        return None
    return VariationModel(n=n, sigma=sigma)


def _task_spec(cfg: Dict[str, object]) -> TaskSpec:
    return TaskSpec(
        kind=TaskKind(cfg.get("task", "nand")),
        k=int(cfg.get("k", 2)),
        n_steps=int(cfg.get("T", 1000)),
        p_one=float(cfg.get("p_one", 0.5)),
    )


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _settings(args)
    task = _task_spec(cfg)
    seed = int(cfg.get("seed", 0))
    net, readout, metrics = run_trial_artifacts(
        _net_config(cfg, seed=seed), task, _readout_params(cfg), _variation(cfg),
    )
    save_network(net, [readout], args.out)
    print(f"task={task.kind.value} k={task.k} seed={seed} "
          f"tr={metrics.tr:.6f} gr={metrics.gr:.6f} -> {args.out}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _settings(args)
    axes = cfg.get("axes")
    if not axes:
        raise SystemExit("sweep needs an \"axes\" object in the config file")
    config = SweepConfig(
        net=_net_config(cfg), task=_task_spec(cfg), readout=_readout_params(cfg),
        variation=_variation(cfg), trials=int(cfg.get("trials", DEFAULT_TRIALS)),
        master_seed=int(cfg.get("master_seed", 0)),
    )
    results = sweep(config, axes)
    sweep_to_csv(results, args.out)
    print(f"{len(results)} cells x {config.trials} trials -> {args.out}")
    return 0


def cmd_adder_mult(args: argparse.Namespace) -> int:
    cfg = _settings(args)
    result = run_adder_multiplier(
        trials=int(cfg.get("trials", ADDER_MULTIPLIER_TRIALS)),
        net_config=_net_config(cfg),
        readout_params=_readout_params(cfg),
        variation=_variation(cfg),
        n_steps=int(cfg.get("T", 1000)),
        p_one=float(cfg.get("p_one", 0.5)),
        master_seed=int(cfg.get("master_seed", 0)),
    )
    sweep_to_csv([result], args.out)
    print(f"adder+multiplier over {result.trials} trials: "
          f"TP={result.tp:.3f} GP={result.gp:.3f} LP_joint={result.lp_joint:.3f} "
          f"LP_product={result.lp_product:.3f} -> {args.out}")
    return 0


def cmd_fault_sim(args: argparse.Namespace) -> int:
    cfg = _settings(args)
    raw_m = cfg.get("m", [1, 2, 3, 4])
    m_values = [int(raw_m)] if isinstance(raw_m, (int, float)) else [int(x) for x in raw_m]
    config = RecoveryConfig(
        n_nodes=int(cfg.get("N", 100)),
        n_steps=int(cfg.get("T", 1000)),
        t_fail=int(cfg.get("t_fail", 700)),
        washout=int(cfg.get("washout", DEFAULT_WASHOUT)),
        input_scale=float(cfg.get("v", 1.0)),
        spectral_radius=float(cfg.get("lambda", 0.1)),
        input_density=float(cfg.get("delta_i", 0.5)),
        output_density=float(cfg.get("delta_o", 1.0)),
        gamma=float(cfg.get("gamma", DEFAULT_RIDGE)),
        theta=float(cfg.get("theta", DEFAULT_THRESHOLD)),
        sign=RidgeSign(cfg.get("sign", "standard")),
        variation=_variation(cfg),
        master_seed=int(cfg.get("seed", cfg.get("master_seed", 0))),
    )
    repeats = int(cfg.get("repeats", 20))
    stats = [run_recovery_experiment(config, m, repeats) for m in m_values]
    recovery_to_csv(stats, args.out)
    for s in stats:
        print(f"m={s.m}: detection_rate={s.detection_rate:.2f} "
              f"post_retrain_lp={s.post_retrain_lp:.2f} ({repeats} repeats)")
    print(f"-> {args.out}")
    return 0


def _read_stream_csv(path) -> Dict[str, np.ndarray]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[int(v) for v in row] for row in reader]
    data = np.array(rows, dtype=int)
    in_cols = [i for i, name in enumerate(header) if name.startswith("in")]
    out_cols = [i for i, name in enumerate(header) if name.startswith("out")]
    if not in_cols:
        raise SystemExit(f"{path} has no in* columns")
    result = {"inputs": data[:, in_cols]}
    if out_cols:
        result["targets"] = data[:, out_cols]
    return result


def cmd_eval(args: argparse.Namespace) -> int:
    net, readouts = load_network(args.network)
    if not readouts:
        raise SystemExit(f"{args.network} holds no readouts")
    cfg = _settings(args)

    if args.stream:
        stream = _read_stream_csv(args.stream)
        inputs = stream["inputs"]
        targets = stream.get("targets")
    else:
        task = _task_spec(cfg)
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        inputs = (rng.random((task.n_steps, task.n_lines)) < task.p_one).astype(int)
        targets = compute_targets(task.kind, inputs)
    if inputs.shape[1] != net.config.n_inputs:
        raise SystemExit(
            f"stream has {inputs.shape[1]} input lines, network expects {net.config.n_inputs}"
        )

    washout = int(cfg.get("washout", DEFAULT_WASHOUT))
    trajectory = run(net, inputs, washout=washout)
    all_bits: List[np.ndarray] = []
    indices = None
    for readout in readouts:
        bits, indices = predict_bits(readout, trajectory, inputs.shape[0])
        all_bits.append(bits)
    bits = np.hstack(all_bits)

    if args.out:
        with open(args.out, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["step"] + [f"out{j}" for j in range(bits.shape[1])])
            for step_index, row in zip(indices, bits):
                writer.writerow([step_index] + list(row))
        print(f"{bits.shape[0]} steps -> {args.out}")
    if targets is not None:
        if targets.shape[1] == bits.shape[1]:
            accuracy = evaluate_accuracy(bits, targets[indices])
            print(f"accuracy={accuracy:.6f} over {bits.shape[0]} aligned steps")
        else:
            print(f"stream targets have {targets.shape[1]} bits, network outputs "
                  f"{bits.shape[1]}; accuracy skipped")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esnlogic",
        description="random recurrent networks computing digital logic",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one network and save it as JSON")
    _add_model_flags(p)
    p.add_argument("--task", choices=[t.value for t in TaskKind])
    p.add_argument("--k", type=int, help="gate arity")
    p.add_argument("--seed", type=int, help="trial seed")
    p.add_argument("--out", required=True, help="output network JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run a parameter grid, write yield CSV")
    _add_model_flags(p)
    p.add_argument("--task", choices=[t.value for t in TaskKind])
    p.add_argument("--k", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("adder-mult", help="joint 2-bit adder/multiplier experiment")
    _add_model_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_adder_mult)

    p = sub.add_parser("fault-sim", help="fault injection and recovery experiment")
    _add_model_flags(p)
    p.add_argument("--m", help="victim counts, comma separated (default 1,2,3,4)")
    p.add_argument("--t-fail", type=int, help="fault injection step")
    p.add_argument("--repeats", type=int, help="repeats per m")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_fault_sim)

    p = sub.add_parser("eval", help="replay a saved network on a stream")
    _add_model_flags(p)
    p.add_argument("--network", required=True, help="network JSON from train")
    p.add_argument("--stream", help="stream CSV with in* (and optional out*) columns")
    p.add_argument("--task", choices=[t.value for t in TaskKind],
                   help="generate the stream from a task instead")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int, help="stream seed when generating")
    p.add_argument("--out", help="write aligned predictions CSV here")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "m", None) is not None and isinstance(args.m, str):
        args.m = [int(x) for x in args.m.split(",") if x.strip()]
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
