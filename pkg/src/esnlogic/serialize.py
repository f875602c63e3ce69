"""Network and readout persistence as JSON.

The document format is {"config": {...}, "w_in": [[...]], "w_res":
[[...]], "gains": [...], "readouts": [{...}, ...]} with every float
printed to 17 significant digits, enough to round-trip IEEE-754 doubles
exactly: a saved network replays bit-identically.  Readout entries are
per output channel; channels sharing delay, threshold, and
regularization merge back into one readout bank on load.  Visibility
masks are not stored separately; hidden nodes are carried by their
structurally zero weight columns.
"""

from __future__ import annotations

import json
from typing import List, Sequence, Tuple

import numpy as np

from .readout import Readout
from .reservoir import Network, NetworkConfig, Transfer, WeightPattern


def format_float(value: float) -> str:
    """One IEEE-754 double as a JSON number with 17 significant digits."""
    out = format(float(value), ".17g")
    if "inf" in out or "nan" in out:
        raise ValueError(f"non-finite value {value} cannot be serialized")
    return out


def _vector(values: Sequence[float]) -> str:
    return "[" + ",".join(format_float(v) for v in values) + "]"


def _matrix(rows: np.ndarray) -> str:
    return "[" + ",".join(_vector(row) for row in rows) + "]"


def _config_json(config: NetworkConfig) -> str:
    parts = [
        f'"n_nodes":{config.n_nodes}',
        f'"n_inputs":{config.n_inputs}',
        f'"n_outputs":{config.n_outputs}',
        f'"input_scale":{format_float(config.input_scale)}',
        f'"spectral_radius":{format_float(config.spectral_radius)}',
        f'"input_density":{format_float(config.input_density)}',
        f'"reservoir_density":{format_float(config.reservoir_density)}',
        f'"output_density":{format_float(config.output_density)}',
        f'"weight_pattern":{json.dumps(config.weight_pattern.value)}',
        f'"transfer":{json.dumps(config.transfer.value)}',
        f'"seed":{config.seed}',
    ]
    return "{" + ",".join(parts) + "}"


def _readout_entries(readouts: Sequence[Readout]) -> str:
    entries = []
    for readout in readouts:
        for channel in readout.w_out:
            entries.append(
                "{"
                + f'"w_out":{_vector(channel)},"tau":{readout.tau},'
                + f'"theta":{format_float(readout.theta)},"gamma":{format_float(readout.gamma)}'
                + "}"
            )
    return "[" + ",".join(entries) + "]"


def network_to_json(net: Network, readouts: Sequence[Readout] = ()) -> str:
    """Serialize a network and its readout bank to a JSON string."""
    parts = [
        f'"config":{_config_json(net.config)}',
        f'"w_in":{_matrix(net.w_in)}',
        f'"w_res":{_matrix(net.w_res)}',
        f'"gains":{_vector(net.gains)}',
        f'"readouts":{_readout_entries(readouts)}',
    ]
    return "{" + ",".join(parts) + "}"


def save_network(net: Network, readouts: Sequence[Readout], path) -> None:
    with open(path, "w") as handle:
        handle.write(network_to_json(net, readouts))
        handle.write("\n")


def _merge_channels(entries: List[dict]) -> List[Readout]:
    """Consecutive channels with one (tau, theta, gamma) form one bank."""
    readouts: List[Readout] = []
    group: List[dict] = []

    def flush():
        if not group:
            return
        w = np.array([e["w_out"] for e in group], dtype=float)
        readouts.append(Readout(w_out=w, tau=int(group[0]["tau"]),
                                theta=float(group[0]["theta"]),
                                gamma=float(group[0]["gamma"])))
        group.clear()

    for entry in entries:
        key = (entry["tau"], entry["theta"], entry["gamma"])
        if group and key != (group[0]["tau"], group[0]["theta"], group[0]["gamma"]):
            flush()
        group.append(entry)
    flush()
    return readouts


def network_from_json(text: str) -> Tuple[Network, List[Readout]]:
    """Parse a network document back into live objects."""
    doc = json.loads(text)
    raw = dict(doc["config"])
    raw["weight_pattern"] = WeightPattern(raw["weight_pattern"])
    raw["transfer"] = Transfer(raw["transfer"])
    config = NetworkConfig(**raw)
    net = Network(
        config=config,
        w_in=np.array(doc["w_in"], dtype=float),
        w_res=np.array(doc["w_res"], dtype=float),
        gains=np.array(doc["gains"], dtype=float),
    )
    expected_in = (config.n_inputs, config.n_nodes)
    if net.w_in.shape != expected_in:
        raise ValueError(f"w_in shape {net.w_in.shape} does not match config {expected_in}")
    expected_res = (config.n_nodes, config.n_nodes)
    if net.w_res.shape != expected_res:
        raise ValueError(f"w_res shape {net.w_res.shape} does not match config {expected_res}")
    return net, _merge_channels(list(doc.get("readouts", [])))


def load_network(path) -> Tuple[Network, List[Readout]]:
    with open(path) as handle:
        return network_from_json(handle.read())
