import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebm.math import Rng, bernoulli_sample, scale_unitary, sigmoid, softplus


class TestRng:
    def test_same_seed_same_stream(self):
        a = Rng(12345).uniform(1000)
        b = Rng(12345).uniform(1000)
        assert np.array_equal(a, b)

    def test_block_matches_scalar_path(self):
        rng = Rng(7)
        block = rng._next_block(5)
        scalar = [Rng(7).next_u64()]
        r = Rng(7)
        scalar = [r.next_u64() for _ in range(5)]
        assert [int(x) for x in block] == scalar

    def test_uniform_in_range(self):
        u = Rng(3).uniform(10000)
        assert u.min() >= 0.0 and u.max() < 1.0

    def test_normal_moments(self):
        z = Rng(11).normal(200000)
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    def test_below_bound(self):
        rng = Rng(5)
        draws = [rng.below(7) for _ in range(1000)]
        assert min(draws) >= 0 and max(draws) <= 6

    def test_integers_below_matches_scalar(self):
        a = Rng(9).integers_below(13, 50)
        r = Rng(9)
        b = [r.below(13) for _ in range(50)]
        assert list(a) == b

    def test_state_resume(self):
        rng = Rng(42)
        rng.uniform(17)
        resumed = Rng(0)
        resumed.state = rng.state
        assert np.array_equal(rng.uniform(8), resumed.uniform(8))


class TestScaleUnitary:
    def test_affine_identity(self):
        assert np.allclose(scale_unitary([0, 5, 10]), [0.0, 0.5, 1.0])

    def test_constant_input_is_zero(self):
        assert np.array_equal(scale_unitary([7, 7, 7]), [0.0, 0.0, 0.0])

    def test_negative_span(self):
        assert np.allclose(scale_unitary([-1, 0, 3]), [0.0, 0.25, 1.0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            scale_unitary([])

    def test_idempotent_on_unit_span(self):
        x = np.array([0.0, 0.25, 0.75, 1.0])
        assert np.array_equal(scale_unitary(x), x)

    def test_matrix_shape_preserved(self):
        out = scale_unitary(np.arange(6.0).reshape(2, 3))
        assert out.shape == (2, 3)


class TestSigmoid:
    def test_midpoint(self):
        assert sigmoid(0.0) == 0.5

    def test_closed_form(self):
        assert abs(sigmoid(math.log(3)) - 0.75) < 1e-15

    def test_temperature_rescaling(self):
        assert sigmoid(2.0, 2.0) == sigmoid(1.0, 1.0)

    def test_extreme_arguments_stay_open(self):
        assert 0.0 < sigmoid(-700.0) < 1.0
        assert 0.0 < sigmoid(700.0) < 1.0
        assert 0.0 < sigmoid(-1e6) < 1.0
        assert 0.0 < sigmoid(1e6) < 1.0

    def test_nonpositive_temperature_rejected(self):
        with pytest.raises(ValueError):
            sigmoid(1.0, 0.0)
        with pytest.raises(ValueError):
            sigmoid(1.0, -2.0)

    @given(st.floats(-500, 500), st.floats(0.01, 100))
    @settings(max_examples=200, deadline=None)
    def test_symmetry(self, x, t):
        assert abs(sigmoid(x, t) + sigmoid(-x, t) - 1.0) < 1e-12

    @given(st.floats(-30, 30))
    @settings(max_examples=100, deadline=None)
    def test_strictly_monotone_where_resolvable(self, x):
        assert sigmoid(x + 0.5) > sigmoid(x)

    @given(st.floats(-500, 500))
    @settings(max_examples=100, deadline=None)
    def test_monotone_in_saturation(self, x):
        # doubles cannot separate the tails, so only non-strict holds there
        assert sigmoid(x + 0.5) >= sigmoid(x)


class TestSoftplus:
    def test_at_zero(self):
        assert softplus(0.0) == math.log(2)

    def test_asymptotes(self):
        assert softplus(-1000.0) == 0.0
        assert softplus(1000.0) == 1000.0
        assert np.isfinite(softplus(1e8))

    @given(st.floats(-300, 300))
    @settings(max_examples=200, deadline=None)
    def test_difference_identity(self, x):
        assert abs(softplus(x) - softplus(-x) - x) < 1e-9


class TestBernoulliSample:
    def test_degenerate_zero(self):
        out = bernoulli_sample(np.zeros(100), Rng(1))
        assert not out.any()

    def test_degenerate_one(self):
        out = bernoulli_sample(np.ones(100), Rng(1))
        assert out.all()

    def test_law_of_large_numbers(self):
        out = bernoulli_sample(np.full(10000, 0.5), Rng(99))
        assert 0.48 <= out.mean() <= 0.52

    def test_seed_reproducibility(self):
        p = Rng(0).uniform(500)
        assert np.array_equal(bernoulli_sample(p, Rng(8)),
                              bernoulli_sample(p, Rng(8)))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            bernoulli_sample(np.array([0.5, 1.5]), Rng(1))
        with pytest.raises(ValueError):
            bernoulli_sample(np.array([-0.1]), Rng(1))
        with pytest.raises(ValueError):
            bernoulli_sample(np.array([np.nan]), Rng(1))

    def test_matrix_shape(self):
        p = np.full((3, 4), 0.5)
        out = bernoulli_sample(p, Rng(2))
        assert out.shape == (3, 4)
        assert np.isin(out, (0.0, 1.0)).all()
