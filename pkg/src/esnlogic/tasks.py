"""Digital logic target functions and random input streams.

Gate tasks take k input bits per step and produce one target bit; the
six-gate bundle produces all six gate outputs of the same k bits in
parallel.  The arithmetic tasks take two 2-bit operands per step on four
input lines, low bit first within each operand, and produce multi-bit
words, again low bit first.  All targets are combinational: the word at
step t is a pure function of the input row at step t.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np


class TaskKind(str, Enum):
    OR = "or"
    AND = "and"
    XOR = "xor"
    NOR = "nor"
    NAND = "nand"
    XNOR = "xnor"
    ADDER2 = "adder2"
    MULTIPLIER2 = "multiplier2"
    SIX_GATE_BUNDLE = "six_gate_bundle"

    @property
    def is_gate(self) -> bool:
        return self in _GATES

    @property
    def is_arithmetic(self) -> bool:
        return self in (TaskKind.ADDER2, TaskKind.MULTIPLIER2)


_GATES = {
    TaskKind.OR,
    TaskKind.AND,
    TaskKind.XOR,
    TaskKind.NOR,
    TaskKind.NAND,
    TaskKind.XNOR,
}

# bundle column order
SIX_GATES = (
    TaskKind.OR,
    TaskKind.AND,
    TaskKind.XOR,
    TaskKind.NOR,
    TaskKind.NAND,
    TaskKind.XNOR,
)

ARITHMETIC_INPUT_LINES = 4
MIN_GATE_ARITY = 2
MAX_GATE_ARITY = 10


def n_input_lines(kind: TaskKind, k: int = 2) -> int:
    """Input lines the task consumes; k only matters for gate tasks."""
    if kind.is_arithmetic:
        return ARITHMETIC_INPUT_LINES
    return k


def n_output_bits(kind: TaskKind) -> int:
    if kind is TaskKind.ADDER2:
        return 3
    if kind is TaskKind.MULTIPLIER2:
        return 4
    if kind is TaskKind.SIX_GATE_BUNDLE:
        return 6
    return 1


@dataclass
class TaskSpec:
    """One task instance: what to compute, over how long a stream.

    Gate kinds (and the bundle) use arity k between 2 and 10; the
    arithmetic kinds always consume 4 input lines and force k to 4.
    Input bits are i.i.d. Bernoulli(p_one).
    """

    kind: TaskKind
    k: int = 2
    n_steps: int = 1000
    p_one: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.kind = TaskKind(self.kind)
        if self.kind.is_arithmetic:
            self.k = ARITHMETIC_INPUT_LINES
        elif not MIN_GATE_ARITY <= self.k <= MAX_GATE_ARITY:
            raise ValueError(
                f"gate arity must lie in [{MIN_GATE_ARITY}, {MAX_GATE_ARITY}], got {self.k}"
            )
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be at least 1, got {self.n_steps}")
        if not 0.0 <= self.p_one <= 1.0:
            raise ValueError(f"p_one must lie in [0, 1], got {self.p_one}")

    @property
    def n_lines(self) -> int:
        return n_input_lines(self.kind, self.k)

    @property
    def n_outputs(self) -> int:
        return n_output_bits(self.kind)


@dataclass(eq=False)
class BitStreams:
    """An input stream and its target words for one task."""

    inputs: np.ndarray  # (T, n_lines) of 0/1
    targets: np.ndarray  # (T, n_outputs) of 0/1


def _bits_to_operands(bits: np.ndarray):
    a = bits[:, 0] + 2 * bits[:, 1]
    b = bits[:, 2] + 2 * bits[:, 3]
    return a, b


def _words(values: np.ndarray, width: int) -> np.ndarray:
    # integer column to bit columns, low bit first
    return (values[:, None] >> np.arange(width)) & 1


def compute_targets(kind: TaskKind, bits: np.ndarray) -> np.ndarray:
    """Target words for an input bit stream, shape (T, n_output_bits)."""
    bits = np.asarray(bits, dtype=int)
    if bits.ndim != 2:
        raise ValueError(f"bits must be 2-d (steps, lines), got shape {bits.shape}")
    if kind.is_arithmetic and bits.shape[1] != ARITHMETIC_INPUT_LINES:
        raise ValueError(
            f"{kind.value} expects {ARITHMETIC_INPUT_LINES} input lines, got {bits.shape[1]}"
        )

    if kind is TaskKind.SIX_GATE_BUNDLE:
        return np.hstack([compute_targets(gate, bits) for gate in SIX_GATES])

    if kind.is_gate:
        ones = bits.sum(axis=1)
        k = bits.shape[1]
        if kind is TaskKind.OR:
            out = ones > 0
        elif kind is TaskKind.AND:
            out = ones == k
        elif kind is TaskKind.XOR:
            out = ones % 2 == 1
        elif kind is TaskKind.NOR:
            out = ones == 0
        elif kind is TaskKind.NAND:
            out = ones < k
        else:
            out = ones % 2 == 0
        return out.astype(int)[:, None]

    a, b = _bits_to_operands(bits)
    if kind is TaskKind.ADDER2:
        return _words(a + b, 3)
    return _words(a * b, 4)


def generate_streams(spec: TaskSpec) -> BitStreams:
    """Draw i.i.d. Bernoulli input bits and compute the matching targets."""
    rng = np.random.default_rng(spec.seed)
    inputs = (rng.random((spec.n_steps, spec.n_lines)) < spec.p_one).astype(int)
    return BitStreams(inputs=inputs, targets=compute_targets(spec.kind, inputs))


def evaluate_accuracy(predicted_bits: np.ndarray, target_bits: np.ndarray) -> float:
    """Fraction of timesteps where every output bit matches its target."""
    predicted = np.asarray(predicted_bits)
    target = np.asarray(target_bits)
    # 1-d streams are single-bit words, one per timestep
    if predicted.ndim == 1:
        predicted = predicted[:, None]
    if target.ndim == 1:
        target = target[:, None]
    if predicted.shape != target.shape:
        raise ValueError(f"shape mismatch: predicted {predicted.shape} vs target {target.shape}")
    return float(np.all(predicted == target, axis=1).mean())


def streams_to_csv(streams: BitStreams, path) -> None:
    """Audit export: one row per timestep, input bits then target bits."""
    n_in = streams.inputs.shape[1]
    n_out = streams.targets.shape[1]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([f"in{i}" for i in range(n_in)] + [f"out{j}" for j in range(n_out)])
        for row_in, row_out in zip(streams.inputs, streams.targets):
            writer.writerow(list(row_in) + list(row_out))
