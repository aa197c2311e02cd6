import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpbo import (
    DatasetSimilarity,
    KernelParams,
    gram_matrix,
    jaccard,
    k2_eval,
    multi_task_kernel,
)

SE = KernelParams("se", 1.0)
MATERN = KernelParams("matern52", 1.0)


class TestK2Eval:
    def test_se_at_zero_distance(self):
        assert k2_eval([0.3, 0.7], [0.3, 0.7], SE) == 1.0

    def test_se_at_sqrt2_distance(self):
        # ||a-b|| = sqrt(2) with unit lengthscale gives exp(-1)
        assert k2_eval([0.0, 0.0], [1.0, 1.0], SE) == pytest.approx(math.exp(-1), rel=1e-12)

    def test_matern_at_unit_distance(self):
        # frozen from a direct scalar evaluation of the 5/2 formula
        assert k2_eval([0.0], [1.0], MATERN) == pytest.approx(0.5239941088318203, abs=1e-12)

    def test_matern_normalized(self):
        assert k2_eval([0.2, 0.4], [0.2, 0.4], MATERN) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            k2_eval([0.0], [0.0, 1.0], SE)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            k2_eval([np.nan], [0.0], SE)

    @given(
        a=st.lists(st.floats(-5, 5), min_size=2, max_size=2),
        b=st.lists(st.floats(-5, 5), min_size=2, max_size=2),
        family=st.sampled_from(["se", "matern52"]),
        ell=st.floats(0.1, 3.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_symmetry_and_range(self, a, b, family, ell):
        params = KernelParams(family, ell)
        v1 = k2_eval(a, b, params)
        v2 = k2_eval(b, a, params)
        assert v1 == v2
        # strictly positive mathematically; float64 may underflow to 0 at
        # extreme distance/lengthscale ratios
        assert 0.0 <= v1 <= 1.0

    def test_se_monotone_decay(self):
        dists = np.linspace(0.0, 3.0, 15)
        vals = [k2_eval([0.0], [d], SE) for d in dists]
        assert all(x > y for x, y in zip(vals, vals[1:]))


class TestGramMatrix:
    def test_single_point(self):
        G = gram_matrix(np.array([[0.4, 0.2]]), SE)
        assert G.shape == (1, 1)
        assert G[0, 0] == 1.0

    def test_two_identical_points(self):
        G = gram_matrix(np.array([[0.5], [0.5]]), SE)
        np.testing.assert_array_equal(G, np.ones((2, 2)))

    def test_matches_elementwise_oracle(self, rng):
        pts = rng.uniform(-1, 1, size=(3, 2))
        for params in (SE, MATERN):
            G = gram_matrix(pts, params)
            for i in range(3):
                for j in range(3):
                    assert G[i, j] == pytest.approx(
                        k2_eval(pts[i], pts[j], params), abs=1e-14
                    )

    def test_symmetric_unit_diagonal(self, rng):
        pts = rng.uniform(-2, 2, size=(12, 3))
        G = gram_matrix(pts, MATERN)
        np.testing.assert_allclose(G, G.T, atol=0)
        np.testing.assert_array_equal(np.diag(G), np.ones(12))

    def test_psd_via_cholesky_with_jitter(self, rng):
        for _ in range(5):
            pts = rng.uniform(0, 1, size=(20, 2))
            G = gram_matrix(pts, KernelParams("se", 0.3))
            np.linalg.cholesky(G + 1e-8 * np.eye(20))  # raises if not PSD

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            gram_matrix(np.empty((0, 2)), SE)


class TestMultiTask:
    def test_identity_similarity(self):
        assert multi_task_kernel(DatasetSimilarity(1.0), 0.5) == 0.5

    def test_zero_similarity(self):
        assert multi_task_kernel(DatasetSimilarity(0.0), 0.9) == 0.0

    def test_product(self):
        assert multi_task_kernel(DatasetSimilarity(0.95), 0.4) == pytest.approx(0.38)

    def test_similarity_range_enforced(self):
        with pytest.raises(ValueError):
            DatasetSimilarity(1.5)


def test_jaccard():
    assert jaccard({1, 2, 3}, {2, 3, 4}).k1 == pytest.approx(0.5)
    assert jaccard(set(), set()).k1 == 1.0
    assert jaccard({1}, {2}).k1 == 0.0


def test_lengthscale_must_be_positive():
    with pytest.raises(ValueError):
        KernelParams("se", 0.0)
