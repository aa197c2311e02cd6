import math

import numpy as np
import pytest
from scipy.stats import qmc

from dpbo import (
    ConvexValidationPipeline,
    EvalMatrices,
    KernelParams,
    LabeledDataset,
    SyntheticMTGPPipeline,
    build_matrices,
    likelihood_curve,
    log_marginal_likelihood,
    sobol_points,
)
from dpbo.kernels import gram_matrix
from dpbo.mtgp import COVARIANCE_JITTER, default_k1_grid
from dpbo.synthetic import make_classification

K2 = KernelParams("se", 0.2)


class TestSobol:
    def test_first_point_is_center(self):
        for d in (1, 2, 5):
            np.testing.assert_array_equal(sobol_points(d, 1)[0], np.full(d, 0.5))

    def test_balance_on_power_of_two_prefix(self):
        pts = sobol_points(3, 16)
        below = np.sum(pts < 0.5, axis=0)
        np.testing.assert_array_equal(below, np.full(3, 8))

    def test_deterministic(self):
        np.testing.assert_array_equal(sobol_points(2, 33), sobol_points(2, 33))

    def test_lower_star_discrepancy_than_uniform(self):
        # averaged over 20 uniform seeds, the structured points win
        pts = sobol_points(2, 64)
        sob_disc = qmc.discrepancy(pts, method="L2-star")
        uni = np.mean(
            [
                qmc.discrepancy(
                    np.random.default_rng(seed).uniform(0, 1, (64, 2)),
                    method="L2-star",
                )
                for seed in range(20)
            ]
        )
        assert sob_disc < uni

    def test_unsupported_dimension(self):
        with pytest.raises(ValueError, match="dimension"):
            sobol_points(30000, 4)
        with pytest.raises(ValueError):
            sobol_points(0, 4)


class _ConstantPipeline:
    """Degenerate pair source: neighbor rows identical to the originals."""

    dim = 2

    def evaluate_pair(self, settings, rng):
        row = np.sin(settings[:, 0] * 3.0)
        return row, row.copy()


class TestBuildMatrices:
    def test_degenerate_neighbor_gives_identical_rows(self):
        mats = build_matrices(4, 6, _ConstantPipeline(), seed=0)
        np.testing.assert_array_equal(mats.f_v, mats.f_vprime)

    def test_one_by_one(self):
        mats = build_matrices(1, 1, _ConstantPipeline(), seed=0)
        assert mats.f_v.shape == (1, 1)

    def test_synthetic_rows_correlate(self):
        pipeline = SyntheticMTGPPipeline(0.8, K2, dim=2)
        mats = build_matrices(30, 20, pipeline, seed=5)
        cors = [
            np.corrcoef(mats.f_v[i], mats.f_vprime[i])[0, 1] for i in range(30)
        ]
        assert np.mean(cors) > 0.6

    def test_pipeline_failure_reports_pair(self):
        class Broken:
            dim = 1

            def evaluate_pair(self, settings, rng):
                raise ValueError("storage offline")

        with pytest.raises(RuntimeError, match="pair 0"):
            build_matrices(2, 2, Broken(), seed=0)

    def test_convex_pipeline_rows_are_scores(self):
        rng = np.random.default_rng(2)
        X, y = make_classification(40, 3, rng)
        train = LabeledDataset.from_arrays(X, y)
        pipeline = ConvexValidationPipeline(train, val_size=15)
        mats = build_matrices(3, 4, pipeline, seed=1)
        assert mats.f_v.shape == (3, 4)
        assert np.all(mats.f_v >= -1.0) and np.all(mats.f_v <= 1.0)
        assert np.all(mats.f_vprime >= -1.0) and np.all(mats.f_vprime <= 1.0)


class TestLikelihoodCurve:
    def test_identical_rows_prefer_high_similarity(self, rng):
        row = rng.standard_normal(12)
        settings = sobol_points(2, 12)
        mats = EvalMatrices(
            f_v=np.tile(row, (4, 1)), f_vprime=np.tile(row, (4, 1)), hyperparams=settings
        )
        curve = likelihood_curve(mats, K2, k1_grid=np.array([0.1, 0.9]))
        assert curve.loglik[1] > curve.loglik[0]

    def test_independent_rows_penalized_near_one(self, rng):
        settings = sobol_points(2, 10)
        mats = EvalMatrices(
            f_v=rng.standard_normal((6, 10)),
            f_vprime=rng.standard_normal((6, 10)),
            hyperparams=settings,
        )
        curve = likelihood_curve(mats, K2)
        mid = np.searchsorted(curve.k1_values, 0.5)
        assert curve.loglik[-1] < curve.loglik[mid]

    def test_recovers_generating_similarity(self):
        pipeline = SyntheticMTGPPipeline(0.8, K2, dim=2)
        mats = build_matrices(10, 20, pipeline, seed=3)
        curve = likelihood_curve(mats, K2)
        assert abs(curve.argmax_k1 - 0.8) <= 0.1

    def test_recovery_within_one_grid_step_at_scale(self):
        # 25+ pairs sharpen the curve to one grid step in >= 8/10 replications
        hits = 0
        for seed in range(10):
            pipeline = SyntheticMTGPPipeline(0.8, K2, dim=2)
            mats = build_matrices(30, 20, pipeline, seed=seed)
            if abs(likelihood_curve(mats, K2).argmax_k1 - 0.8) <= 0.05 + 1e-12:
                hits += 1
        assert hits >= 8

    def test_finite_on_whole_default_grid(self, rng):
        pipeline = SyntheticMTGPPipeline(0.5, K2, dim=2)
        mats = build_matrices(5, 8, pipeline, seed=9)
        curve = likelihood_curve(mats, K2)
        assert np.isfinite(curve.loglik).all()
        np.testing.assert_allclose(curve.k1_values, default_k1_grid())

    def test_k1_grid_range_validated(self, rng):
        mats = build_matrices(2, 4, _ConstantPipeline(), seed=0)
        with pytest.raises(ValueError):
            likelihood_curve(mats, K2, k1_grid=np.array([0.5, 1.0]))

    def test_duplicated_task_reduces_to_single_task(self, rng):
        # identical rows at full similarity: rotating into sum/difference
        # coordinates splits the joint density into a single-task density
        # at sqrt(2) r (scaled) and a pure-jitter density at zero
        s = 8
        settings = sobol_points(2, s)
        K = gram_matrix(settings, K2)
        r = np.linalg.cholesky(K + 1e-9 * np.eye(s)) @ rng.standard_normal(s)
        j = COVARIANCE_JITTER
        joint = np.kron(np.ones((2, 2)), K) + j * np.eye(2 * s)
        lhs = log_marginal_likelihood(joint, np.concatenate([r, r]))
        single = log_marginal_likelihood(K + (j / 2.0) * np.eye(s), r)
        jitter_part = -0.5 * s * math.log(2 * math.pi * j)
        rhs = single - 0.5 * s * math.log(2.0) + jitter_part
        assert lhs == pytest.approx(rhs, abs=1e-4)

    def test_csv_round_trip(self, tmp_path, rng):
        mats = build_matrices(3, 5, _ConstantPipeline(), seed=0)
        curve = likelihood_curve(mats, K2, k1_grid=np.array([0.2, 0.5, 0.8]))
        path = tmp_path / "curve.csv"
        curve.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "k1,loglik"
        k1s = [float(line.split(",")[0]) for line in lines[1:]]
        assert k1s == [0.2, 0.5, 0.8]

    def test_matrices_csv_export(self, tmp_path):
        mats = build_matrices(2, 3, _ConstantPipeline(), seed=0)
        pv, pvp = tmp_path / "v.csv", tmp_path / "vp.csv"
        mats.to_csv(pv, pvp)
        again = np.loadtxt(pv, delimiter=",")
        np.testing.assert_allclose(again, mats.f_v)
