"""Linear readouts trained by ridge regression on recorded states.

The readout sees the bias-augmented state delayed by `tau` steps relative
to the target stream, and its continuous output is thresholded to a bit.
Training can be restricted to a visible subset of nodes; the returned
weight matrix is re-expanded with zeros on hidden nodes so it always
spans the full state, which keeps prediction code uniform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .reservoir import StateTrajectory

DEFAULT_DELAY = 1
DEFAULT_THRESHOLD = 0.5
DEFAULT_RIDGE = 0.015


class RidgeSign(str, Enum):
    """Sign of the regularization term in the normal equations.

    STANDARD solves (X'X + g^2 I) W = X'Y, the usual ridge form and the
    default.  NEGATED solves (X'X - g^2 I) W = X'Y; the subtracted form
    appears in some published setups and is kept selectable for fidelity
    comparisons even though it can leave the system indefinite.
    """

    STANDARD = "standard"
    NEGATED = "negated"


class SingularRegressionError(RuntimeError):
    """Raised when the regularized normal equations cannot be solved."""


@dataclass(eq=False)
class Readout:
    """Trained linear readout over the bias-augmented state.

    w_out has shape (n_channels, n_nodes + 1); the last column multiplies
    the constant bias entry.  visible_mask marks the nodes the training
    was allowed to see; hidden node columns are structurally zero.
    Output values at or above `theta` read as 1.
    """

    w_out: np.ndarray
    tau: int = DEFAULT_DELAY
    theta: float = DEFAULT_THRESHOLD
    gamma: float = DEFAULT_RIDGE
    visible_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.w_out = np.atleast_2d(np.asarray(self.w_out, dtype=float))
        if self.tau < 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta must lie strictly between 0 and 1, got {self.theta}")
        if self.visible_mask is None:
            self.visible_mask = np.ones(self.w_out.shape[1] - 1, dtype=bool)
        else:
            self.visible_mask = np.asarray(self.visible_mask, dtype=bool)

    @property
    def n_channels(self) -> int:
        return self.w_out.shape[0]


@dataclass(eq=False)
class RegressionProblem:
    """A ridge problem X -> Y with penalty gamma and a chosen sign."""

    x: np.ndarray
    y: np.ndarray
    gamma: float
    sign: RidgeSign = RidgeSign.STANDARD

    def solve(self) -> np.ndarray:
        """Return W of shape (n_targets, dim) minimizing the penalized fit.

        Solves the normal equations through a symmetric factorization
        shared by all target columns, never through an explicit inverse.
        Raises SingularRegressionError when the system is singular or the
        solution comes back non-finite.
        """
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        gram = x.T @ x
        shift = self.gamma * self.gamma
        if self.sign is RidgeSign.NEGATED:
            shift = -shift
        a = gram + shift * np.eye(gram.shape[0])
        b = x.T @ y
        try:
            w = scipy.linalg.solve(a, b, assume_a="sym")
        except scipy.linalg.LinAlgError as err:
            raise SingularRegressionError(
                f"normal equations singular under {self.sign.value} sign "
                f"with gamma={self.gamma} (condition {np.linalg.cond(a):.3e})"
            ) from err
        if not np.all(np.isfinite(w)):
            raise SingularRegressionError(
                f"non-finite solution under {self.sign.value} sign "
                f"with gamma={self.gamma} (condition {np.linalg.cond(a):.3e})"
            )
        return w.T


def aligned_pairs(
    trajectory: StateTrajectory, targets: np.ndarray, tau: int = DEFAULT_DELAY
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pair recorded states with delay-shifted targets.

    The target for input step t is paired with state x(t + tau), the
    first state to have absorbed u(t) when tau = 1.  Row r of the
    trajectory holds x(washout + 1 + r), so it pairs with target index
    washout + 1 + r - tau.  Returns (states, targets, indices) restricted
    to rows whose shifted index falls inside the target stream.  Raises
    ValueError when nothing remains.
    """
    targets = np.asarray(targets)
    if targets.ndim == 1:
        targets = targets[:, None]
    n_targets = targets.shape[0]
    first = trajectory.first_state_index
    rows = trajectory.states.shape[0]

    lo = max(0, tau - first)
    hi = min(rows, n_targets - first + tau)
    if hi <= lo:
        raise ValueError(
            f"delay {tau} leaves no aligned state/target pairs "
            f"(washout {trajectory.washout}, {n_targets} target steps)"
        )
    indices = np.arange(lo, hi) + first - tau
    return trajectory.states[lo:hi], targets[indices], indices


def expand_visible(w_visible: np.ndarray, visible_mask: np.ndarray, dim: int) -> np.ndarray:
    """Scatter weights trained on a node subset back to full width."""
    w_full = np.zeros((w_visible.shape[0], dim))
    cols = np.concatenate([np.flatnonzero(visible_mask), [dim - 1]])
    w_full[:, cols] = w_visible
    return w_full


def train(
    trajectory: StateTrajectory,
    targets: np.ndarray,
    tau: int = DEFAULT_DELAY,
    theta: float = DEFAULT_THRESHOLD,
    gamma: float = DEFAULT_RIDGE,
    sign: RidgeSign = RidgeSign.STANDARD,
    visible_mask: Optional[np.ndarray] = None,
) -> Readout:
    """Fit a readout to delay-aligned targets.

    `visible_mask`, when given, is a length n_nodes boolean vector of the
    nodes the readout may use; the bias entry is always available.
    Hidden nodes get weight exactly zero in the returned readout.
    """
    x, y, _ = aligned_pairs(trajectory, targets, tau)
    dim = x.shape[1]
    if visible_mask is not None:
        visible_mask = np.asarray(visible_mask, dtype=bool)
        if visible_mask.shape != (dim - 1,):
            raise ValueError(
                f"visible_mask must have length {dim - 1}, got shape {visible_mask.shape}"
            )
        x = x[:, np.concatenate([np.flatnonzero(visible_mask), [dim - 1]])]
    w = RegressionProblem(x=x, y=y, gamma=gamma, sign=sign).solve()
    if visible_mask is not None:
        w = expand_visible(w, visible_mask, dim)
    return Readout(w_out=w, tau=tau, theta=theta, gamma=gamma, visible_mask=visible_mask)


def predict(readout: Readout, trajectory: StateTrajectory) -> np.ndarray:
    """Analog readout values for every trajectory row, shape (rows, channels)."""
    return trajectory.states @ readout.w_out.T


def threshold_bits(values: np.ndarray, theta: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Continuous readout values to bits: at or above theta reads as 1."""
    return (np.asarray(values) >= theta).astype(int)


def predict_bits(
    readout: Readout, trajectory: StateTrajectory, n_target_steps: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Threshold readout output along a trajectory, delay-aligned.

    Returns (bits, indices) where bits[r] is the predicted word for
    target step indices[r].  The caller says how long the target stream
    is so alignment can clip correctly.
    """
    dummy = np.zeros(n_target_steps)
    states, _, indices = aligned_pairs(trajectory, dummy, readout.tau)
    values = states @ readout.w_out.T
    return threshold_bits(values, readout.theta), indices


def draw_visible_mask(
    n_nodes: int, output_density: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw a boolean mask with round(output_density * n_nodes) nodes visible."""
    if not 0.0 <= output_density <= 1.0:
        raise ValueError(f"output_density must lie in [0, 1], got {output_density}")
    count = int(round(output_density * n_nodes))
    mask = np.zeros(n_nodes, dtype=bool)
    mask[rng.choice(n_nodes, size=count, replace=False)] = True
    return mask
