"""Ridge regression, delay alignment, and thresholding."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esnlogic import (
    NetworkConfig,
    Readout,
    RegressionProblem,
    RidgeSign,
    SingularRegressionError,
    StateTrajectory,
    aligned_pairs,
    build_network,
    draw_visible_mask,
    predict,
    predict_bits,
    run,
    threshold_bits,
    train,
)


def oracle_ridge(x, y, gamma, sign=RidgeSign.STANDARD):
    """Brute-force normal-equation inverse, independent of the solver path."""
    s = 1.0 if sign is RidgeSign.STANDARD else -1.0
    a = x.T @ x + s * gamma * gamma * np.eye(x.shape[1])
    return (np.linalg.inv(a) @ (x.T @ y)).T


def random_problem(rng, max_rows=50, max_cols=8):
    rows = int(rng.integers(3, max_rows + 1))
    cols = int(rng.integers(1, max_cols + 1))
    targets = int(rng.integers(1, 4))
    x = rng.standard_normal((rows, cols))
    y = rng.standard_normal((rows, targets))
    return x, y


class TestRegressionProblem:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_oracle_standard(self, seed):
        rng = np.random.default_rng(seed)
        x, y = random_problem(rng)
        w = RegressionProblem(x=x, y=y, gamma=0.015, sign=RidgeSign.STANDARD).solve()
        expected = oracle_ridge(x, y, 0.015)
        assert np.max(np.abs(w - expected)) <= 1e-8 * max(1.0, np.max(np.abs(expected)))

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_oracle_negated(self, seed):
        rng = np.random.default_rng(100 + seed)
        x, y = random_problem(rng)
        # keep the negated system safely positive definite for the oracle
        w = RegressionProblem(x=x, y=y, gamma=1e-4, sign=RidgeSign.NEGATED).solve()
        expected = oracle_ridge(x, y, 1e-4, RidgeSign.NEGATED)
        assert np.max(np.abs(w - expected)) <= 1e-7 * max(1.0, np.max(np.abs(expected)))

    def test_two_by_two_cramer(self):
        # explicit 2x2 inverse as a second oracle
        x = np.array([[1.0, 2.0], [3.0, 1.0], [0.5, -1.0]])
        y = np.array([[1.0], [0.0], [1.0]])
        gamma = 0.1
        a = x.T @ x + gamma * gamma * np.eye(2)
        det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
        inv = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det
        expected = (inv @ x.T @ y).T
        w = RegressionProblem(x=x, y=y, gamma=gamma, sign=RidgeSign.STANDARD).solve()
        assert np.allclose(w, expected, atol=1e-10)

    def test_singular_raises_named_error(self):
        x = np.zeros((10, 3))
        x[:, 2] = 1.0  # rank 1
        y = np.ones((10, 1))
        with pytest.raises(SingularRegressionError):
            RegressionProblem(x=x, y=y, gamma=0.0, sign=RidgeSign.STANDARD).solve()

    def test_negated_can_be_singular_where_standard_is_not(self):
        # gram matrix with an eigenvalue exactly gamma^2
        x = np.diag([1.0, 0.015])
        y = np.array([[1.0], [1.0]])
        RegressionProblem(x=x, y=y, gamma=0.015, sign=RidgeSign.STANDARD).solve()
        with pytest.raises(SingularRegressionError):
            RegressionProblem(x=x, y=y, gamma=0.015, sign=RidgeSign.NEGATED).solve()

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_regularization_shrinks_norm(self, seed):
        rng = np.random.default_rng(seed)
        x, y = random_problem(rng)
        w_small = RegressionProblem(x=x, y=y, gamma=0.01, sign=RidgeSign.STANDARD).solve()
        w_large = RegressionProblem(x=x, y=y, gamma=1.0, sign=RidgeSign.STANDARD).solve()
        assert np.linalg.norm(w_large) <= np.linalg.norm(w_small) + 1e-12


class TestAlignment:
    def make_trajectory(self, rows, n_nodes=3, washout=10):
        states = np.arange(rows * (n_nodes + 1), dtype=float).reshape(rows, n_nodes + 1)
        states[:, -1] = 1.0
        return StateTrajectory(states=states, washout=washout, n_steps=washout + rows)

    def test_tau_one_pairing(self):
        traj = self.make_trajectory(rows=5, washout=10)
        # row r holds x(11 + r); tau=1 pairs it with target 10 + r
        _, targets, indices = aligned_pairs(traj, np.arange(15), tau=1)
        assert list(indices) == [10, 11, 12, 13, 14]
        assert list(targets[:, 0]) == [10, 11, 12, 13, 14]

    def test_tau_two_shifts_one_more(self):
        traj = self.make_trajectory(rows=5, washout=10)
        states, targets, indices = aligned_pairs(traj, np.arange(15), tau=2)
        assert list(indices) == [9, 10, 11, 12, 13]
        assert states.shape[0] == 5

    def test_tau_zero_clips_tail(self):
        traj = self.make_trajectory(rows=5, washout=10)
        # x(11+r) would pair with target 11+r; targets end at 14
        states, targets, indices = aligned_pairs(traj, np.arange(15), tau=0)
        assert list(indices) == [11, 12, 13, 14]
        assert states.shape[0] == 4

    def test_large_tau_clips_head(self):
        traj = self.make_trajectory(rows=5, washout=0)
        # rows hold x(1..5); tau=3 pairs row r with target r - 2
        states, targets, indices = aligned_pairs(traj, np.arange(10), tau=3)
        assert list(indices) == [0, 1, 2]
        assert states.shape[0] == 3

    def test_empty_alignment_raises(self):
        traj = self.make_trajectory(rows=2, washout=10)
        with pytest.raises(ValueError):
            aligned_pairs(traj, np.arange(3), tau=1)


class TestTrain:
    def build_trajectory(self, seed=0, n_nodes=30, steps=200):
        net = build_network(NetworkConfig(n_nodes=n_nodes, n_inputs=2, seed=seed))
        inputs = np.random.default_rng(seed).integers(0, 2, (steps, 2))
        return net, inputs, run(net, inputs)

    def test_masked_weights_exactly_zero(self):
        net, inputs, traj = self.build_trajectory()
        mask = np.zeros(30, dtype=bool)
        mask[:7] = True
        targets = (inputs[:, 0] & inputs[:, 1]).astype(float)
        readout = train(traj, targets, visible_mask=mask)
        assert np.all(readout.w_out[:, 7:30] == 0.0)
        assert readout.w_out.shape == (1, 31)

    def test_bias_only_fit_is_target_mean(self):
        net, inputs, traj = self.build_trajectory()
        mask = np.zeros(30, dtype=bool)
        targets = np.full(200, 0.25)
        readout = train(traj, targets, gamma=0.0, visible_mask=mask)
        assert np.allclose(readout.w_out[0, :30], 0.0)
        assert abs(readout.w_out[0, 30] - 0.25) < 1e-10

    def test_interpolation_at_zero_gamma(self):
        rng = np.random.default_rng(7)
        rows, dim = 40, 12
        states = np.hstack([rng.standard_normal((rows, dim)), np.ones((rows, 1))])
        traj = StateTrajectory(states=states, washout=0, n_steps=rows)
        targets = rng.standard_normal(rows + 1)
        readout = train(traj, targets, tau=1, gamma=0.0)
        values = predict(readout, traj)
        _, aligned, _ = aligned_pairs(traj, targets, tau=1)
        assert rows > dim  # overdetermined: exact only if targets lie in span
        # instead check the normal equations residual is orthogonal to columns
        residual = values - aligned
        assert np.max(np.abs(states.T @ residual)) < 1e-8

    def test_theta_validation(self):
        with pytest.raises(ValueError):
            Readout(w_out=np.ones((1, 3)), tau=1, theta=0.0, gamma=0.1)
        with pytest.raises(ValueError):
            Readout(w_out=np.ones((1, 3)), tau=1, theta=1.0, gamma=0.1)

    def test_trained_gate_replays_truth_table(self):
        net, inputs, traj = self.build_trajectory(seed=3, n_nodes=60)
        targets = 1 - (inputs[:, 0] & inputs[:, 1])
        readout = train(traj, targets)
        bits, indices = predict_bits(readout, traj, 200)
        assert np.array_equal(bits[:, 0], targets[indices])


class TestThreshold:
    def test_boundary_tie_goes_to_one(self):
        assert threshold_bits(np.array([0.5]), 0.5).tolist() == [1]

    def test_basic(self):
        assert threshold_bits(np.array([0.7, 0.2]), 0.5).tolist() == [1, 0]
        assert threshold_bits(np.array([-0.3, 1.4]), 0.5).tolist() == [0, 1]

    def test_constant_bias_readout(self):
        states = np.hstack([np.zeros((4, 2)), np.ones((4, 1))])
        traj = StateTrajectory(states=states, washout=0, n_steps=4)
        readout = Readout(w_out=np.array([[0.0, 0.0, 0.5]]), tau=1, theta=0.5, gamma=0.0)
        assert np.allclose(predict(readout, traj), 0.5)


class TestVisibleMask:
    def test_draw_count(self):
        rng = np.random.default_rng(0)
        mask = draw_visible_mask(100, 0.3, rng)
        assert mask.sum() == 30 and mask.dtype == bool

    def test_full_density_all_true(self):
        rng = np.random.default_rng(0)
        assert draw_visible_mask(10, 1.0, rng).all()

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            draw_visible_mask(10, 1.5, np.random.default_rng(0))
