"""Reservoir construction, spectral scaling, and simulation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esnlogic import (
    DegenerateReservoirError,
    Network,
    NetworkConfig,
    Transfer,
    WeightPattern,
    build_network,
    estimate_spectral_radius,
    run,
    spectral_radius,
    step,
    transfer_apply,
)


def dense_radius(w):
    """Independent oracle: dense eigenvalue decomposition."""
    return float(np.max(np.abs(np.linalg.eigvals(w))))


class TestConfigValidation:
    def test_defaults_are_valid(self):
        cfg = NetworkConfig()
        assert cfg.n_nodes == 100
        assert cfg.spectral_radius == 0.1
        assert cfg.weight_pattern is WeightPattern.NORMAL
        assert cfg.transfer is Transfer.SAT_LINEAR

    @pytest.mark.parametrize("field,value", [
        ("n_nodes", 0), ("n_inputs", 0), ("n_outputs", -1),
        ("spectral_radius", 0.0), ("spectral_radius", 1.0), ("spectral_radius", 1.5),
        ("input_density", -0.1), ("reservoir_density", 1.01), ("output_density", 2.0),
    ])
    def test_rejects_bad_values(self, field, value):
        with pytest.raises(ValueError):
            NetworkConfig(**{field: value})

    def test_enum_coercion_from_strings(self):
        cfg = NetworkConfig(weight_pattern="uniform", transfer="tanh_variable")
        assert cfg.weight_pattern is WeightPattern.UNIFORM
        assert cfg.transfer is Transfer.TANH_VARIABLE

    def test_slot_counts(self):
        cfg = NetworkConfig(n_nodes=10, n_inputs=3, input_density=0.5,
                            reservoir_density=0.25, output_density=0.8)
        assert cfg.n_reservoir_slots == 25
        assert cfg.n_driven_nodes == 5
        assert cfg.n_input_slots == 15
        assert cfg.n_visible_nodes == 8


class TestSpectralEstimator:
    def test_zero_matrix(self):
        est = estimate_spectral_radius(np.zeros((5, 5)))
        assert est.value == 0.0 and est.converged

    def test_nilpotent_reports_zero(self):
        w = np.diag(np.ones(4), k=1)  # strictly upper shift, all eigenvalues 0
        assert spectral_radius(w) == 0.0

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            estimate_spectral_radius(np.ones((3, 4)))

    def test_known_diagonal(self):
        w = np.diag([0.3, -0.7, 0.2])
        assert abs(spectral_radius(w) - 0.7) < 1e-9

    def test_rotation_block_complex_pair(self):
        # pure rotation scaled by r has complex eigenvalues of modulus r
        r, a = 0.83, 0.4
        w = r * np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        assert abs(spectral_radius(w) - r) < 1e-9

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_dense_oracle_on_random(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 40))
        w = rng.standard_normal((n, n))
        est = estimate_spectral_radius(w)
        if est.converged:
            assert abs(est.value - dense_radius(w)) < 1e-7 * max(1.0, dense_radius(w))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_estimator_agrees_with_oracle_when_converged(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 25))
        w = rng.uniform(-1, 1, (n, n)) * (rng.random((n, n)) < 0.6)
        est = estimate_spectral_radius(w)
        truth = dense_radius(w)
        if est.converged and truth > 1e-12:
            assert abs(est.value - truth) <= 1e-6 * max(1.0, truth)


class TestBuildNetwork:
    def test_deterministic_in_seed(self):
        a = build_network(NetworkConfig(seed=5))
        b = build_network(NetworkConfig(seed=5))
        assert np.array_equal(a.w_res, b.w_res)
        assert np.array_equal(a.w_in, b.w_in)
        assert np.array_equal(a.gains, b.gains)

    def test_different_seeds_differ(self):
        a = build_network(NetworkConfig(seed=1))
        b = build_network(NetworkConfig(seed=2))
        assert not np.array_equal(a.w_res, b.w_res)

    @pytest.mark.parametrize("pattern", list(WeightPattern))
    @pytest.mark.parametrize("density", [0.3, 1.0])
    def test_radius_hits_target(self, pattern, density):
        cfg = NetworkConfig(n_nodes=60, weight_pattern=pattern,
                            reservoir_density=density, spectral_radius=0.4, seed=11)
        net = build_network(cfg)
        assert abs(dense_radius(net.w_res) - 0.4) < 1e-6

    def test_reservoir_slot_count(self):
        cfg = NetworkConfig(n_nodes=30, reservoir_density=0.2, seed=3)
        net = build_network(cfg)
        assert np.count_nonzero(net.w_res) == cfg.n_reservoir_slots

    def test_input_lines_share_one_driven_set(self):
        cfg = NetworkConfig(n_nodes=40, n_inputs=3, input_density=0.5, seed=9)
        net = build_network(cfg)
        columns = [set(np.flatnonzero(net.w_in[i])) for i in range(3)]
        assert columns[0] == columns[1] == columns[2]
        assert len(columns[0]) == cfg.n_driven_nodes

    def test_input_weight_structure(self):
        v = 2.5
        cfg = NetworkConfig(n_nodes=50, n_inputs=2, input_scale=v, input_density=1.0, seed=4)
        net = build_network(cfg)
        # each weight is +-v plus unit normal noise; recovering the sign
        # and subtracting it leaves something bounded and zero-mean
        residual = np.abs(net.w_in).ravel() - v
        assert np.all(np.abs(net.w_in) > 0)
        assert abs(np.mean(residual)) < 0.5

    def test_identical_pattern_values_equal_before_scaling(self):
        cfg = NetworkConfig(n_nodes=25, weight_pattern=WeightPattern.IDENTICAL,
                            reservoir_density=0.5, seed=8)
        net = build_network(cfg)
        nz = net.w_res[net.w_res != 0]
        assert np.allclose(nz, nz[0])

    def test_variable_transfer_gains_in_range(self):
        cfg = NetworkConfig(transfer=Transfer.SAT_LINEAR_VARIABLE, seed=2)
        net = build_network(cfg)
        assert np.all(net.gains >= 0.0) and np.all(net.gains <= 2.0)
        assert net.gains.std() > 0.1

    def test_fixed_transfer_gains_are_ones(self):
        net = build_network(NetworkConfig(seed=2))
        assert np.array_equal(net.gains, np.ones(100))

    def test_degenerate_reservoir_raises(self):
        # density low enough that some seeds give an all-zero-spectrum matrix
        raised = False
        for seed in range(200):
            cfg = NetworkConfig(n_nodes=6, reservoir_density=0.06, seed=seed)
            try:
                build_network(cfg)
            except DegenerateReservoirError as err:
                assert str(seed) in str(err)
                raised = True
                break
        assert raised, "no degenerate seed found in 200 tries"


class TestStepAndTransfer:
    def test_step_matches_hand_computation(self):
        cfg = NetworkConfig(n_nodes=2, n_inputs=1, seed=0)
        net = build_network(cfg)
        net.w_res = np.array([[0.0, 0.5], [-0.25, 0.0]])
        net.w_in = np.array([[1.0, -2.0]])
        net.state = np.array([0.2, -0.4])
        out = step(net, np.array([1.0]))
        expected = np.clip([0.5 * -0.4 + 1.0, -0.25 * 0.2 + -2.0], -1, 1)
        assert np.allclose(out, expected)
        assert out is net.state

    def test_weight_override_is_per_step(self):
        cfg = NetworkConfig(n_nodes=3, n_inputs=1, seed=1)
        net = build_network(cfg)
        stored = net.w_res.copy()
        step(net, np.array([1.0]), w_res=np.zeros((3, 3)))
        assert np.array_equal(net.w_res, stored)

    def test_sat_linear_clips(self):
        net = build_network(NetworkConfig(n_nodes=4, seed=0))
        out = transfer_apply(net, np.array([-7.0, -0.5, 0.5, 7.0]))
        assert np.array_equal(out, [-1.0, -0.5, 0.5, 1.0])

    def test_tanh_squashes(self):
        net = build_network(NetworkConfig(n_nodes=2, transfer=Transfer.TANH, seed=0))
        out = transfer_apply(net, np.array([0.3, -5.0]))
        assert np.allclose(out, np.tanh([0.3, -5.0]))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_sat_linear_state_always_bounded(self, seed):
        rng = np.random.default_rng(seed)
        net = build_network(NetworkConfig(n_nodes=20, n_inputs=2, seed=seed))
        for _ in range(10):
            x = step(net, rng.uniform(-3, 3, 2))
            assert np.all(np.abs(x) <= 1.0)


class TestRun:
    def test_trajectory_shape_and_bias(self):
        net = build_network(NetworkConfig(n_nodes=10, n_inputs=2, seed=0))
        inputs = np.random.default_rng(0).integers(0, 2, (50, 2))
        traj = run(net, inputs, washout=10)
        assert traj.states.shape == (40, 11)
        assert np.all(traj.states[:, -1] == 1.0)
        assert traj.first_state_index == 11

    def test_rows_match_manual_stepping(self):
        net = build_network(NetworkConfig(n_nodes=8, n_inputs=1, seed=3))
        inputs = np.random.default_rng(1).integers(0, 2, (20, 1)).astype(float)
        traj = run(net, inputs, washout=4)
        net.state = np.zeros(8)
        for t in range(20):
            x = step(net, inputs[t])
            if t >= 4:
                assert np.array_equal(traj.states[t - 4, :8], x)

    def test_resets_state_by_default(self):
        net = build_network(NetworkConfig(n_nodes=5, n_inputs=1, seed=2))
        inputs = np.ones((15, 1))
        a = run(net, inputs, washout=2).states
        b = run(net, inputs, washout=2).states
        assert np.array_equal(a, b)

    def test_initial_state_is_used(self):
        net = build_network(NetworkConfig(n_nodes=5, n_inputs=1, seed=2))
        inputs = np.ones((3, 1))
        a = run(net, inputs, washout=0, initial_state=np.full(5, 0.9)).states
        b = run(net, inputs, washout=0).states
        assert not np.array_equal(a[0], b[0])

    def test_weights_for_step_receives_step_index(self):
        net = build_network(NetworkConfig(n_nodes=4, n_inputs=1, seed=1))
        seen = []

        def override(t):
            seen.append(t)
            return net.w_res

        run(net, np.ones((7, 1)), washout=1, weights_for_step=override)
        assert seen == list(range(7))

    def test_rejects_bad_shapes_and_lengths(self):
        net = build_network(NetworkConfig(n_nodes=5, n_inputs=2, seed=0))
        with pytest.raises(ValueError):
            run(net, np.ones((10, 3)))
        with pytest.raises(ValueError):
            run(net, np.ones((0, 2)))
        with pytest.raises(ValueError):
            run(net, np.ones((10, 2)), washout=10)


class TestEchoStateProperty:
    def test_two_starts_converge_at_low_radius(self):
        rng = np.random.default_rng(0)
        for seed in range(5):
            net = build_network(NetworkConfig(n_nodes=50, n_inputs=2,
                                              spectral_radius=0.1, seed=seed))
            inputs = rng.integers(0, 2, (40, 2)).astype(float)
            a = run(net, inputs, washout=0, initial_state=rng.uniform(-1, 1, 50)).states
            b = run(net, inputs, washout=0, initial_state=rng.uniform(-1, 1, 50)).states
            distance = np.linalg.norm(a[29, :50] - b[29, :50])
            assert distance < 1e-9
