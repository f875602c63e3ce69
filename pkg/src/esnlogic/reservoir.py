"""Recurrent network construction and simulation.

A network here is a sparse random recurrent weight matrix rescaled to a
target spectral radius, a sparse random input matrix, and a per-node
transfer function (saturating linear or tanh, optionally with random
gains).  Construction is fully deterministic given the config, which is
what makes the yield experiments reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

DEFAULT_WASHOUT = 10


class WeightPattern(str, Enum):
    """How nonzero recurrent weights are valued before rescaling."""

    IDENTICAL = "identical"
    UNIFORM = "uniform"
    NORMAL = "normal"


class Transfer(str, Enum):
    """Transfer function family, with fixed or randomly varied gains."""

    SAT_LINEAR = "sat_linear"
    TANH = "tanh"
    SAT_LINEAR_VARIABLE = "sat_linear_variable"
    TANH_VARIABLE = "tanh_variable"

    @property
    def is_variable(self) -> bool:
        return self in (Transfer.SAT_LINEAR_VARIABLE, Transfer.TANH_VARIABLE)

    @property
    def is_tanh(self) -> bool:
        return self in (Transfer.TANH, Transfer.TANH_VARIABLE)


class DegenerateReservoirError(RuntimeError):
    """Raised when a sampled recurrent matrix has spectral radius zero."""


@dataclass
class NetworkConfig:
    """Build-time parameters of a random recurrent network.

    n_nodes:            number of internal nodes
    n_inputs:           number of external input lines
    n_outputs:          number of output channels read from the network
    input_scale:        magnitude of the signed part of input weights
    spectral_radius:    target spectral radius after rescaling, in (0, 1)
    input_density:      fraction of nodes wired to the input lines; every
                        line connects to the same chosen node subset
    reservoir_density:  fraction of node-to-node connections present
    output_density:     fraction of nodes visible to the readouts
    weight_pattern:     value scheme for recurrent weights
    transfer:           transfer function kind
    seed:               RNG seed fixing every random draw of the build
    """

    n_nodes: int = 100
    n_inputs: int = 2
    n_outputs: int = 1
    input_scale: float = 1.0
    spectral_radius: float = 0.1
    input_density: float = 0.5
    reservoir_density: float = 1.0
    output_density: float = 0.5
    weight_pattern: WeightPattern = WeightPattern.NORMAL
    transfer: Transfer = Transfer.SAT_LINEAR
    seed: int = 0

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError(f"n_nodes must be at least 1, got {self.n_nodes}")
        if self.n_inputs < 1:
            raise ValueError(f"n_inputs must be at least 1, got {self.n_inputs}")
        if self.n_outputs < 1:
            raise ValueError(f"n_outputs must be at least 1, got {self.n_outputs}")
        if not 0.0 < self.spectral_radius < 1.0:
            raise ValueError(
                f"spectral_radius must lie strictly between 0 and 1, got {self.spectral_radius}"
            )
        for name in ("input_density", "reservoir_density", "output_density"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        self.weight_pattern = WeightPattern(self.weight_pattern)
        self.transfer = Transfer(self.transfer)

    @property
    def n_reservoir_slots(self) -> int:
        return int(round(self.reservoir_density * self.n_nodes * self.n_nodes))

    @property
    def n_driven_nodes(self) -> int:
        return int(round(self.input_density * self.n_nodes))

    @property
    def n_input_slots(self) -> int:
        return self.n_inputs * self.n_driven_nodes

    @property
    def n_visible_nodes(self) -> int:
        return int(round(self.output_density * self.n_nodes))


@dataclass
class SpectralEstimate:
    value: float
    converged: bool
    matvecs: int


def estimate_spectral_radius(
    w: np.ndarray, tol: float = 1e-10, max_matvecs: int = 10000
) -> SpectralEstimate:
    """Estimate the spectral radius of a square matrix by power iteration.

    Plain power iteration stalls when the dominant eigenvalue is a complex
    conjugate pair, which happens routinely for signed random matrices.  So
    each cycle fits the last three iterates with a quadratic recurrence
    z = p*w + q*v and takes the dominant root of mu^2 - p*mu - q.  When the
    pair is complex the root modulus is sqrt(-q).  Convergence is declared
    once the estimate is stable to a relative tolerance of `tol` on two
    consecutive cycles; the matrix-vector budget is capped at `max_matvecs`.

    Returns a SpectralEstimate; `converged` is False when the cap is hit.
    A zero matrix reports radius 0 immediately, and a vector that decays to
    exactly zero triggers a restart (a few dead restarts mean the matrix is
    nilpotent, which also reports 0).
    """
    n = w.shape[0]
    if w.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {w.shape}")
    if not np.any(w):
        return SpectralEstimate(0.0, True, 0)

    restarts = 0
    rng = np.random.default_rng(restarts)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)

    rho_prev = None
    stable = 0
    matvecs = 0
    while matvecs + 2 <= max_matvecs:
        wv = w @ v
        z = w @ wv
        matvecs += 2
        z_norm = np.linalg.norm(z)
        if np.linalg.norm(wv) == 0.0 or z_norm == 0.0:
            restarts += 1
            if restarts > 3:
                # every start vector died: nilpotent
                return SpectralEstimate(0.0, True, matvecs)
            rng = np.random.default_rng(restarts)
            v = rng.standard_normal(n)
            v /= np.linalg.norm(v)
            rho_prev = None
            stable = 0
            continue

        basis = np.stack([wv, v], axis=1)
        (p, q), *_ = np.linalg.lstsq(basis, z, rcond=None)
        disc = p * p + 4.0 * q
        if disc >= 0.0:
            half = np.sqrt(disc) / 2.0
            rho = max(abs(p / 2.0 + half), abs(p / 2.0 - half))
        else:
            rho = np.sqrt(-q)

        if rho_prev is not None and abs(rho - rho_prev) <= tol * max(rho, 1e-300):
            stable += 1
            if stable >= 2:
                return SpectralEstimate(float(rho), True, matvecs)
        else:
            stable = 0
        rho_prev = rho
        v = z / z_norm

    return SpectralEstimate(float(rho_prev if rho_prev is not None else 0.0), False, matvecs)


def spectral_radius(w: np.ndarray, tol: float = 1e-10, max_matvecs: int = 10000) -> float:
    """Convenience wrapper returning just the estimated radius."""
    return estimate_spectral_radius(w, tol=tol, max_matvecs=max_matvecs).value


@dataclass(eq=False)
class Network:
    """A built network holding weights, gains, and the current state.

    The state vector is owned by the network: step() advances it in
    place and run() resets it.  Concurrent trials should each build
    their own network.
    """

    config: NetworkConfig
    w_in: np.ndarray  # (n_inputs, n_nodes)
    w_res: np.ndarray  # (n_nodes, n_nodes), row i collects weights into node i
    gains: np.ndarray  # (n_nodes,)
    state: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.state is None:
            self.state = np.zeros(self.config.n_nodes)


def build_network(config: NetworkConfig) -> Network:
    """Sample a network from the config, deterministically in config.seed.

    Draw order is fixed and documented so that serialized networks stay
    reproducible: reservoir slot positions, reservoir values (skipped for
    the identical pattern), driven node choice, input signs, input noise,
    then gains (skipped for non-variable transfer).

    Recurrent slots are chosen without replacement among the n_nodes^2
    positions and valued per the weight pattern, then the whole matrix is
    rescaled so its spectral radius equals config.spectral_radius.  A
    fraction input_density of nodes is chosen once and every input line
    connects to exactly those nodes, each connection valued
    s * input_scale + eps with s a fair sign and eps a unit normal draw.
    Sharing one driven node set keeps the input drive on those nodes
    strongly bimodal under the saturating transfer, which is what makes
    trained gates tolerant of recurrent cross-talk; spreading connections
    per line instead dilutes the drive and parity-style targets stop
    training reliably.  The state starts at zero.  Raises
    DegenerateReservoirError, naming the seed, when the sampled matrix has
    spectral radius zero and cannot be rescaled.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_nodes

    slots = rng.choice(n * n, size=config.n_reservoir_slots, replace=False)
    if config.weight_pattern is WeightPattern.IDENTICAL:
        values = np.ones(slots.size)
    elif config.weight_pattern is WeightPattern.UNIFORM:
        values = rng.uniform(-1.0, 1.0, slots.size)
    else:
        values = rng.standard_normal(slots.size)
    w_res = np.zeros(n * n)
    w_res[slots] = values
    w_res = w_res.reshape(n, n)

    driven = rng.choice(n, size=config.n_driven_nodes, replace=False)
    signs = rng.integers(0, 2, (config.n_inputs, driven.size)) * 2 - 1
    noise = rng.standard_normal((config.n_inputs, driven.size))
    w_in = np.zeros((config.n_inputs, n))
    w_in[:, driven] = signs * config.input_scale + noise

    if config.transfer.is_variable:
        gains = rng.uniform(0.0, 2.0, n)
    else:
        gains = np.ones(n)

    estimate = estimate_spectral_radius(w_res)
    radius = estimate.value
    if not estimate.converged:
        # iteration can stall when several eigenvalues tie on the spectral
        # circle (short cycles in sparse identical-weight matrices); the
        # rescaling postcondition still has to hold, so fall back to a
        # dense eigendecomposition
        radius = float(np.max(np.abs(np.linalg.eigvals(w_res))))
    if radius == 0.0:
        raise DegenerateReservoirError(
            f"reservoir sampled with seed {config.seed} has spectral radius zero; "
            "choose another seed or raise reservoir_density"
        )
    w_res = w_res * (config.spectral_radius / radius)

    return Network(config=config, w_in=w_in, w_res=w_res, gains=gains)


def transfer_apply(network: Network, pre: np.ndarray) -> np.ndarray:
    """Apply the per-node transfer function to a pre-activation vector.

    Saturating linear kinds clamp gain * drive to [-1, 1]; tanh kinds
    squash it through the hyperbolic tangent.
    """
    driven = network.gains * pre
    if network.config.transfer.is_tanh:
        return np.tanh(driven)
    return np.clip(driven, -1.0, 1.0)


def step(network: Network, inputs: np.ndarray, w_res: Optional[np.ndarray] = None) -> np.ndarray:
    """Advance the network state one step and return the new state.

    The new state is f(W x + W_in' u); `w_res` overrides the stored
    recurrent matrix for this step only, which is how temporal weight
    variation is driven.
    """
    w = network.w_res if w_res is None else w_res
    pre = w @ network.state + network.w_in.T @ inputs
    network.state = transfer_apply(network, pre)
    return network.state


@dataclass(eq=False)
class StateTrajectory:
    """States recorded from a run, bias-augmented.

    Row r of `states` is the state after absorbing input step
    (washout + r), i.e. x(washout + 1 + r), with a trailing constant 1
    column for the readout bias.  The first `washout` states are dropped.
    """

    states: np.ndarray  # (n_steps - washout, n_nodes + 1)
    washout: int
    n_steps: int

    @property
    def first_state_index(self) -> int:
        return self.washout + 1


def run(
    network: Network,
    inputs: np.ndarray,
    washout: int = DEFAULT_WASHOUT,
    weights_for_step: Optional[Callable[[int], np.ndarray]] = None,
    initial_state: Optional[np.ndarray] = None,
) -> StateTrajectory:
    """Drive the network through an input sequence and record states.

    `inputs` has one row per step, shape (T, n_inputs).  The state is
    reset to zero first (or to `initial_state` when given, which is how
    the echo-state-property check starts two runs apart); the network is
    left holding the final state.  When `weights_for_step` is given, step
    t uses weights_for_step(t) in place of the stored recurrent matrix.
    Raises ValueError when no states remain after the washout.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != network.config.n_inputs:
        raise ValueError(
            f"inputs must have shape (T, {network.config.n_inputs}), got {inputs.shape}"
        )
    n_steps = inputs.shape[0]
    if n_steps == 0:
        raise ValueError("empty input sequence")
    if n_steps <= washout:
        raise ValueError(f"washout {washout} consumes all {n_steps} input steps")

    n = network.config.n_nodes
    network.state = np.zeros(n) if initial_state is None else np.asarray(initial_state, float)
    rows = np.empty((n_steps - washout, n + 1))
    rows[:, n] = 1.0
    for t in range(n_steps):
        w = None if weights_for_step is None else weights_for_step(t)
        x = step(network, inputs[t], w_res=w)
        if t >= washout:
            rows[t - washout, :n] = x
    return StateTrajectory(states=rows, washout=washout, n_steps=n_steps)
