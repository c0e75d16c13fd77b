import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from parnet.network import (
    Architecture,
    InitBounds,
    WeightVector,
    flat_index,
    flatten,
    forward,
    forward_batch,
    init_weights,
    param_count,
    predict_truncated,
    truncation_bound,
    unflatten,
)


def naive_sigmoid(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def naive_block_outputs(arch, flat, x):
    """Per-block top-neuron outputs via direct scalar recursion.

    Independent oracle: walks the structured index map neuron by neuron,
    no array code shared with the production forward pass.
    """
    outs = []
    for k in range(1, arch.blocks + 1):
        act = [
            naive_sigmoid(
                sum(
                    flat[flat_index(arch, k, 0, i, j + 1)] * x[j]
                    for j in range(arch.dim)
                )
                + flat[flat_index(arch, k, 0, i, 0)]
            )
            for i in range(1, arch.width + 1)
        ]
        for level in range(1, arch.depth - 1):
            act = [
                naive_sigmoid(
                    sum(
                        flat[flat_index(arch, k, level, i, j + 1)] * act[j]
                        for j in range(arch.width)
                    )
                    + flat[flat_index(arch, k, level, i, 0)]
                )
                for i in range(1, arch.width + 1)
            ]
        z = (
            sum(
                flat[flat_index(arch, k, arch.depth - 1, 1, j + 1)] * act[j]
                for j in range(arch.width)
            )
            + flat[flat_index(arch, k, arch.depth - 1, 1, 0)]
        )
        outs.append(naive_sigmoid(z))
    return outs


def naive_forward(arch, flat, x):
    tops = naive_block_outputs(arch, flat, x)
    return sum(
        flat[flat_index(arch, k, arch.depth, 1, 1)] * tops[k - 1]
        for k in range(1, arch.blocks + 1)
    )


class TestParamCount:
    def test_paper_shape_single_block(self):
        assert param_count(Architecture(1, 4, 8, 1)) == 170

    def test_paper_shape_many_blocks(self):
        assert param_count(Architecture(800, 4, 8, 1)) == 136_000

    def test_minimal_net_by_hand(self):
        # 1 block, depth 2, width 1, dim 1: input neuron has weight+bias (2),
        # top neuron has weight+bias (2), one outer weight -> 5.
        assert param_count(Architecture(1, 2, 1, 1)) == 5

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            Architecture(0, 4, 8, 1)
        with pytest.raises(ValueError):
            Architecture(1, 1, 8, 1)
        with pytest.raises(ValueError):
            Architecture(1, 4, -2, 1)


@pytest.mark.parametrize(
    "arch",
    [
        Architecture(1, 2, 1, 1),
        Architecture(2, 3, 2, 2),
        Architecture(3, 4, 3, 2),
        Architecture(2, 5, 2, 3),
    ],
)
class TestFlatLayout:
    def all_structured_indices(self, arch):
        for k in range(1, arch.blocks + 1):
            for i in range(1, arch.width + 1):
                for j in range(arch.dim + 1):
                    yield (k, 0, i, j)
            for level in range(1, arch.depth - 1):
                for i in range(1, arch.width + 1):
                    for j in range(arch.width + 1):
                        yield (k, level, i, j)
            for j in range(arch.width + 1):
                yield (k, arch.depth - 1, 1, j)
            yield (k, arch.depth, 1, 1)

    def test_structured_to_flat_is_a_bijection(self, arch):
        hits = [flat_index(arch, *idx) for idx in self.all_structured_indices(arch)]
        assert sorted(hits) == list(range(param_count(arch)))

    def test_flatten_inverts_unflatten(self, arch):
        rng = np.random.default_rng(7)
        flat = rng.standard_normal(param_count(arch))
        parts = unflatten(arch, flat)
        assert np.array_equal(flatten(arch, parts), flat)


class TestInitWeights:
    def test_zero_bounds_give_zero_vector(self):
        arch = Architecture(3, 4, 2, 2)
        w = init_weights(arch, InitBounds(0.0, 0.0), np.random.default_rng(0))
        assert np.all(w.values == 0.0)

    def test_outer_weights_are_exactly_zero(self):
        arch = Architecture(5, 3, 4, 2)
        w = init_weights(arch, InitBounds(1000.0, 20.0), np.random.default_rng(3))
        for k in range(1, arch.blocks + 1):
            assert w.values[flat_index(arch, k, arch.depth, 1, 1)] == 0.0

    def test_deterministic_per_seed(self):
        arch = Architecture(4, 4, 3, 1)
        bounds = InitBounds(10.0, 2.0)
        w1 = init_weights(arch, bounds, np.random.default_rng(42))
        w2 = init_weights(arch, bounds, np.random.default_rng(42))
        assert np.array_equal(w1.values, w2.values)

    def test_input_level_is_uniform(self):
        # 6250 blocks x 8 neurons x (1+1) entries = 1e5 input-level draws.
        arch = Architecture(6250, 4, 8, 1)
        w = init_weights(arch, InitBounds(1000.0, 20.0), np.random.default_rng(11))
        draws = unflatten(arch, w.values).input.ravel()
        assert draws.size == 100_000
        assert -1000.0 <= draws.min() <= -990.0
        assert 990.0 <= draws.max() <= 1000.0
        counts, _ = np.histogram(draws, bins=20, range=(-1000.0, 1000.0))
        assert chisquare(counts).pvalue > 0.01

    def test_inner_levels_respect_inner_bound(self):
        arch = Architecture(50, 4, 8, 1)
        w = init_weights(arch, InitBounds(1000.0, 20.0), np.random.default_rng(5))
        parts = unflatten(arch, w.values)
        assert np.abs(parts.inner).max() <= 20.0
        assert np.abs(parts.top).max() <= 20.0


class TestForward:
    def test_fresh_init_outputs_zero_everywhere(self):
        arch = Architecture(7, 4, 5, 3)
        w = init_weights(arch, InitBounds(1000.0, 20.0), np.random.default_rng(1))
        xs = np.random.default_rng(2).uniform(-5, 5, size=(40, 3))
        assert np.all(forward_batch(w, xs) == 0.0)

    def test_half_output_through_zero_weights(self):
        # All weights zero except the outer one: every sigmoid sees 0 and
        # outputs 1/2, so the network returns outer_weight * 1/2.
        arch = Architecture(1, 2, 1, 1)
        values = np.zeros(param_count(arch))
        values[flat_index(arch, 1, arch.depth, 1, 1)] = 1.0
        w = WeightVector(arch, values)
        assert forward(w, np.array([0.3])) == 0.5

    def test_matches_naive_recursive_oracle(self):
        arch = Architecture(2, 3, 2, 2)
        rng = np.random.default_rng(9)
        values = rng.uniform(-2, 2, size=param_count(arch))
        w = WeightVector(arch, values)
        xs = rng.uniform(-3, 3, size=(100, 2))
        got = forward_batch(w, xs)
        want = np.array([naive_forward(arch, values, x) for x in xs])
        assert np.max(np.abs(got - want)) <= 1e-12 * np.max(1.0 + np.abs(want))

    def test_output_bounded_by_outer_mass(self):
        arch = Architecture(5, 4, 3, 2)
        rng = np.random.default_rng(13)
        values = rng.uniform(-4, 4, size=param_count(arch))
        w = WeightVector(arch, values)
        xs = rng.uniform(-10, 10, size=(200, 2))
        bound = np.abs(unflatten(arch, values).outer).sum()
        assert np.all(np.abs(forward_batch(w, xs)) <= bound)

    def test_dimension_mismatch_rejected(self):
        arch = Architecture(1, 2, 1, 2)
        w = WeightVector(arch, np.zeros(param_count(arch)))
        with pytest.raises(ValueError):
            forward(w, np.array([1.0]))
        with pytest.raises(ValueError):
            forward_batch(w, np.ones((4, 3)))


def saturated_constant_net(outer: float) -> WeightVector:
    """1-block net whose top neuron is saturated at 1, so forward == outer."""
    arch = Architecture(1, 2, 1, 1)
    values = np.zeros(param_count(arch))
    values[flat_index(arch, 1, 1, 1, 0)] = 1000.0  # top bias, sigmoid -> 1.0
    values[flat_index(arch, 1, 2, 1, 1)] = outer
    return WeightVector(arch, values)


class TestTruncation:
    def test_inside_band_passes_through(self):
        w = saturated_constant_net(0.4)
        assert predict_truncated(w, np.array([0.0]), 46.0) == 0.4

    def test_clamps_above(self):
        w = saturated_constant_net(100.0)
        assert predict_truncated(w, np.array([0.0]), 46.0) == 46.0

    def test_clamps_below(self):
        w = saturated_constant_net(-100.0)
        assert predict_truncated(w, np.array([0.0]), 46.0) == -46.0

    @given(outer=st.floats(-500, 500), beta=st.floats(0.1, 50))
    @settings(max_examples=50, deadline=None)
    def test_always_within_band(self, outer, beta):
        w = saturated_constant_net(outer)
        assert abs(predict_truncated(w, np.array([0.0]), beta)) <= beta

    def test_truncation_bound_is_log_scaled(self):
        assert truncation_bound(100) == pytest.approx(10 * math.log(100))
        assert truncation_bound(100, scale=3.0) == pytest.approx(3 * math.log(100))
