"""Temporal weight variation and permanent node faults.

Variation models device drift: each step, a handful of nonzero recurrent
weights are offset by fresh Gaussian noise, relative to the ORIGINAL
matrix, so perturbations never accumulate.  Faults model dead nodes: all
weights into and out of a victim are zeroed permanently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reservoir import Network

DEFAULT_NOISE_ENTRIES = 1
DEFAULT_NOISE_STD = 0.1


@dataclass(frozen=True)
class VariationModel:
    """Per-step weight noise: n nonzero entries offset by Normal(0, sigma).

    Positions are resampled every step and offsets are applied to the
    original matrix, so the noise models jitter, not drift.
    """

    n: int = DEFAULT_NOISE_ENTRIES
    sigma: float = DEFAULT_NOISE_STD
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")


def noisy_weights(base: np.ndarray, model: VariationModel, t: int) -> np.ndarray:
    """Return a perturbed copy of `base` for time step t.

    Pure in (base, model.seed, t): the same triple always yields the same
    matrix, and matrices for different steps are independent.  Exactly
    model.n nonzero entries differ from base (offset by independent
    Normal(0, sigma) draws); everything else is bit-equal.  Intended to be
    passed per step as the recurrent-weight override of step()/run().

    Raises ValueError when model.n exceeds the number of nonzero entries.
    """
    nonzero = np.flatnonzero(base)
    if model.n > nonzero.size:
        raise ValueError(
            f"cannot perturb {model.n} entries, matrix has only {nonzero.size} nonzero"
        )
    out = base.copy()
    if model.n == 0 or model.sigma == 0.0:
        return out
    rng = np.random.default_rng((model.seed, t))
    chosen = rng.choice(nonzero, size=model.n, replace=False)
    out.reshape(-1)[chosen] += rng.normal(0.0, model.sigma, model.n)
    return out


@dataclass(frozen=True)
class FaultEvent:
    """A permanent fault: `m` victim nodes disconnected at step t_fail."""

    m: int
    t_fail: int
    victims: tuple = field(default=())

    def __post_init__(self):
        victims = tuple(int(v) for v in self.victims)
        object.__setattr__(self, "victims", victims)
        if self.m < 0:
            raise ValueError(f"m must be non-negative, got {self.m}")
        if len(victims) != self.m:
            raise ValueError(f"expected {self.m} victims, got {len(victims)}")
        if len(set(victims)) != len(victims):
            raise ValueError("victim indices must be distinct")


def draw_fault(m: int, t_fail: int, n_nodes: int, seed: int) -> FaultEvent:
    """Resolve a fault schedule into concrete victims.

    Victims are drawn uniformly without replacement among all n_nodes
    nodes, including ones the readout sees: the worst case for any
    monitoring scheme.
    """
    if not 0 <= m <= n_nodes:
        raise ValueError(f"m must lie in [0, {n_nodes}], got {m}")
    rng = np.random.default_rng(seed)
    victims = rng.choice(n_nodes, size=m, replace=False)
    return FaultEvent(m=m, t_fail=t_fail, victims=tuple(int(v) for v in victims))


def apply_fault(net: Network, event: FaultEvent) -> Network:
    """Disconnect the event's victims in place and return the network.

    For each victim i, row i and column i of the recurrent matrix, the
    input weights into node i, and state entry i are all zeroed.  With
    zero in-weights and f(0) = 0 the victim's state stays 0 for every
    subsequent step and input.  Readout weights are untouched; retraining
    is the teacher's job.  N never shrinks, so shapes and masks built for
    the network remain valid.
    """
    n = net.config.n_nodes
    for v in event.victims:
        if not 0 <= v < n:
            raise ValueError(f"victim index {v} outside [0, {n})")
    if event.m == 0:
        return net
    victims = list(event.victims)
    net.w_res[victims, :] = 0.0
    net.w_res[:, victims] = 0.0
    net.w_in[:, victims] = 0.0
    net.state[victims] = 0.0
    return net


def variation_stepper(base: np.ndarray, model: VariationModel):
    """Bind a variation model to a base matrix as a per-step override.

    Returns a callable t -> matrix suitable for run(weights_for_step=...).
    """
    def weights_at(t: int) -> np.ndarray:
        return noisy_weights(base, model, t)

    return weights_at
