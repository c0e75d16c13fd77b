import numpy as np
import pytest

from parnet.network import (
    Architecture,
    InitBounds,
    WeightVector,
    flat_index,
    forward_batch,
    init_weights,
    param_count,
)
from parnet.risk import Dataset, empirical_risk, fd_gradient, gradient, value_and_gradient

from test_network import naive_block_outputs, naive_forward, saturated_constant_net


def random_instance(seed, max_blocks=4, max_depth=4, max_width=4, max_dim=3, max_n=8):
    rng = np.random.default_rng(seed)
    arch = Architecture(
        blocks=int(rng.integers(1, max_blocks + 1)),
        depth=int(rng.integers(2, max_depth + 1)),
        width=int(rng.integers(1, max_width + 1)),
        dim=int(rng.integers(1, max_dim + 1)),
    )
    w = WeightVector(arch, rng.uniform(-1.5, 1.5, size=param_count(arch)))
    n = int(rng.integers(1, max_n + 1))
    data = Dataset(rng.uniform(-1, 1, size=(n, arch.dim)), rng.standard_normal(n))
    return w, data


def grad_disagreement(w, data, h=1e-5):
    exact = gradient(w, data)
    approx = fd_gradient(w, data, h=h)
    return np.max(np.abs(exact - approx)) / (1.0 + np.max(np.abs(exact)))


class TestDataset:
    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 1)), np.zeros(2))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Dataset(np.array([[np.inf]]), np.array([0.0]))

    def test_head_tail_split(self):
        data = Dataset(np.arange(6.0)[:, None], np.arange(6.0))
        assert data.head(4).n == 4
        assert data.tail(2).ys.tolist() == [4.0, 5.0]


class TestEmpiricalRisk:
    def test_fresh_init_risk_is_mean_square_of_targets(self):
        arch = Architecture(3, 4, 2, 1)
        w = init_weights(arch, InitBounds(1000.0, 20.0), np.random.default_rng(0))
        data = Dataset(np.array([[0.1], [-0.4]]), np.array([1.0, -1.0]))
        assert empirical_risk(w, data) == 1.0

    def test_fresh_init_zero_targets(self):
        arch = Architecture(2, 3, 2, 1)
        w = init_weights(arch, InitBounds(10.0, 2.0), np.random.default_rng(1))
        data = Dataset(np.array([[0.5], [0.7], [-0.2]]), np.zeros(3))
        assert empirical_risk(w, data) == 0.0

    def test_matches_direct_summation_oracle(self):
        rng = np.random.default_rng(23)
        arch = Architecture(2, 3, 2, 2)
        w = WeightVector(arch, rng.uniform(-2, 2, size=param_count(arch)))
        data = Dataset(rng.uniform(-1, 1, size=(10, 2)), rng.standard_normal(10))
        direct = (
            sum(
                (naive_forward(arch, w.values, x) - y) ** 2
                for x, y in zip(data.xs, data.ys)
            )
            / data.n
        )
        assert empirical_risk(w, data) == pytest.approx(direct, rel=1e-12)

    def test_dimension_mismatch_rejected(self):
        arch = Architecture(1, 2, 1, 2)
        w = WeightVector(arch, np.zeros(param_count(arch)))
        with pytest.raises(ValueError):
            empirical_risk(w, Dataset(np.zeros((3, 1)), np.zeros(3)))


class TestGradient:
    def test_fresh_init_gradient_structure(self):
        # Zero outer weights kill every sensitivity below the output level,
        # so only the outer components can be nonzero, and those equal
        # (2/n) * sum_i (0 - y_i) * top_output_k(x_i).
        arch = Architecture(3, 3, 2, 1)
        w = init_weights(arch, InitBounds(100.0, 5.0), np.random.default_rng(4))
        rng = np.random.default_rng(5)
        data = Dataset(rng.uniform(-1, 1, size=(6, 1)), rng.standard_normal(6))

        g = gradient(w, data)
        outer_positions = {
            flat_index(arch, k, arch.depth, 1, 1) for k in range(1, arch.blocks + 1)
        }
        for pos in range(param_count(arch)):
            if pos not in outer_positions:
                assert g[pos] == 0.0

        tops = np.array([naive_block_outputs(arch, w.values, x) for x in data.xs])
        for k in range(1, arch.blocks + 1):
            expected = (2.0 / data.n) * np.sum((0.0 - data.ys) * tops[:, k - 1])
            assert g[flat_index(arch, k, arch.depth, 1, 1)] == pytest.approx(
                expected, rel=1e-12
            )

    def test_zero_residuals_give_zero_gradient(self):
        rng = np.random.default_rng(8)
        arch = Architecture(2, 4, 3, 2)
        w = WeightVector(arch, rng.uniform(-1, 1, size=param_count(arch)))
        xs = rng.uniform(-1, 1, size=(5, 2))
        data = Dataset(xs, forward_batch(w, xs))
        assert np.all(gradient(w, data) == 0.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_finite_differences(self, seed):
        w, data = random_instance(seed)
        assert grad_disagreement(w, data) < 1e-6

    def test_zeroed_block_has_zero_slice_except_outer(self):
        rng = np.random.default_rng(17)
        arch = Architecture(3, 3, 2, 1)
        values = rng.uniform(-1, 1, size=param_count(arch))
        size = arch.block_size
        values[size : 2 * size] = 0.0  # wipe block 2 entirely
        w = WeightVector(arch, values)
        data = Dataset(rng.uniform(-1, 1, size=(4, 1)), rng.standard_normal(4))
        g = gradient(w, data)
        outer2 = flat_index(arch, 2, arch.depth, 1, 1)
        for pos in range(size, 2 * size):
            if pos != outer2:
                assert g[pos] == 0.0
        assert g[outer2] != 0.0

    def test_value_and_gradient_consistent(self):
        w, data = random_instance(99)
        value, grad = value_and_gradient(w, data)
        assert value == empirical_risk(w, data)
        assert np.array_equal(grad, gradient(w, data))


class TestFiniteDifferenceOracle:
    def test_exact_on_quadratic_coordinate(self):
        # With the top neuron saturated at 1, the risk is exactly quadratic in
        # the outer weight, so the central difference matches 2*(w - mean(y)).
        w = saturated_constant_net(0.7)
        data = Dataset(np.array([[0.0], [1.0], [-1.0]]), np.array([1.0, 2.0, 0.0]))
        outer_pos = flat_index(w.arch, 1, w.arch.depth, 1, 1)
        fd = fd_gradient(w, data, h=1e-3)
        assert fd[outer_pos] == pytest.approx(2.0 * (0.7 - 1.0), abs=1e-9)

    def test_zero_residuals_near_zero(self):
        rng = np.random.default_rng(3)
        arch = Architecture(1, 3, 2, 1)
        w = WeightVector(arch, rng.uniform(-1, 1, size=param_count(arch)))
        xs = rng.uniform(-1, 1, size=(4, 1))
        data = Dataset(xs, forward_batch(w, xs))
        assert np.max(np.abs(fd_gradient(w, data, h=1e-5))) < 1e-9

    def test_rejects_nonpositive_step(self):
        w, data = random_instance(1)
        with pytest.raises(ValueError):
            fd_gradient(w, data, h=0.0)
