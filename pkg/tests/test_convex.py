import itertools

import numpy as np
import pytest

from dpbo import (
    LabeledDataset,
    loss_constants,
    stability_bound,
    train_erm,
    validation_score,
)
from dpbo.synthetic import make_classification


def dataset(rng, n=30, d=3):
    X, y = make_classification(n, d, rng)
    return LabeledDataset.from_arrays(X, y)


class TestDataset:
    def test_rescaling_to_unit_ball(self):
        X = np.array([[3.0, 4.0], [0.5, 0.0]])
        ds = LabeledDataset.from_arrays(X, [1.0, -1.0])
        assert np.linalg.norm(ds.features, axis=1).max() <= 1.0 + 1e-12

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError, match="label"):
            LabeledDataset.from_arrays(np.zeros((2, 2)), [0.0, 1.0])

    def test_oversized_features_rejected_without_rescale(self):
        with pytest.raises(ValueError, match="norms"):
            LabeledDataset.from_arrays(np.array([[2.0, 0.0]]), [1.0], rescale=False)

    def test_swap_is_a_neighbor(self, rng):
        ds = dataset(rng, n=10)
        nb = ds.with_swapped(3, np.zeros(3), 1.0)
        diff = np.sum(np.any(ds.features != nb.features, axis=1) | (ds.labels != nb.labels))
        assert diff == 1


class TestTrainErm:
    def test_huge_regularization_shrinks_weights(self, rng):
        ds = dataset(rng)
        model = train_erm(ds, 1e6, loss="logistic")
        assert np.linalg.norm(model.w) <= 1e-6

    def test_symmetric_data_gives_zero(self):
        x = np.array([0.6, 0.3])
        X = np.array([x, -x, x, -x])
        y = np.array([1.0, -1.0, -1.0, 1.0])
        ds = LabeledDataset.from_arrays(X, y)
        model = train_erm(ds, 0.5)
        np.testing.assert_allclose(model.w, 0.0, atol=1e-7)

    def test_objective_matches_grid_search(self, rng):
        # strong convexity means the fine-grid minimum is within 1e-3
        X, y = make_classification(5, 2, rng)
        ds = LabeledDataset.from_arrays(X, y)
        lam = 1.0
        model = train_erm(ds, lam)

        def objective(w):
            margins = ds.labels * (ds.features @ w)
            return 0.5 * lam * w @ w + np.logaddexp(0.0, -margins).mean()

        ticks = np.linspace(-2, 2, 161)
        grid_best = min(
            objective(np.array(w)) for w in itertools.product(ticks, repeat=2)
        )
        assert objective(model.w) <= grid_best + 1e-3

    def test_weight_norm_bounded_by_inverse_lambda(self, rng):
        for lam in (0.05, 0.3, 2.0):
            ds = dataset(rng, n=40)
            model = train_erm(ds, lam)
            assert np.linalg.norm(model.w) <= 1.0 / lam + 1e-9

    def test_deterministic(self, rng):
        ds = dataset(rng)
        w1 = train_erm(ds, 0.2).w
        w2 = train_erm(ds, 0.2).w
        np.testing.assert_array_equal(w1, w2)

    def test_smoothed_hinge_trains(self, rng):
        ds = dataset(rng)
        model = train_erm(ds, 0.5, loss="hinge_smooth")
        assert np.isfinite(model.w).all()

    def test_exact_hinge_flag(self, rng):
        ds = dataset(rng)
        model = train_erm(ds, 0.5, loss="hinge")
        assert np.linalg.norm(model.w) <= 1.0 / 0.5 + 1e-6

    def test_nonpositive_lambda_rejected(self, rng):
        with pytest.raises(ValueError):
            train_erm(dataset(rng), 0.0)

    def test_iteration_cap_reported(self, rng):
        from dpbo import ConvergenceError

        with pytest.raises(ConvergenceError, match="gradient norm"):
            train_erm(dataset(rng), 1e-6, tol=1e-14, max_iter=3)


class TestValidationScore:
    def test_zero_weights_ramp(self, rng):
        ds = dataset(rng)
        assert validation_score(np.zeros(3), ds, "ramp") == pytest.approx(-1.0)

    def test_separated_with_margin_scores_zero(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0]])
        y = np.array([1.0, -1.0])
        ds = LabeledDataset.from_arrays(X, y)
        assert validation_score(np.array([2.0, 0.0]), ds, "ramp") == 0.0

    def test_matches_per_point_loop(self, rng):
        ds = dataset(rng, n=10)
        w = rng.standard_normal(3)
        for g in ("ramp", "sigmoid"):
            total = 0.0
            for x, y in zip(ds.features, ds.labels):
                m = y * float(x @ w)
                if g == "ramp":
                    total += min(1.0, max(0.0, 1.0 - m))
                else:
                    total += 1.0 / (1.0 + np.exp(m))
            assert validation_score(w, ds, g) == pytest.approx(-total / ds.size)

    def test_lipschitz_in_weights(self, rng):
        ds = dataset(rng, n=15)
        for g in ("ramp", "sigmoid"):
            L, _ = loss_constants(g)
            for _ in range(20):
                w1 = rng.standard_normal(3)
                w2 = rng.standard_normal(3)
                gap = abs(validation_score(w1, ds, g) - validation_score(w2, ds, g))
                assert gap <= L * np.linalg.norm(w1 - w2) + 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            validation_score(np.zeros(2), dataset(rng), "ramp")

    def test_loss_constants(self):
        assert loss_constants("ramp") == (1.0, 1.0)
        assert loss_constants("sigmoid") == (0.25, 1.0)
        with pytest.raises(ValueError):
            loss_constants("hinge")


class TestStabilityBound:
    def test_equal_regularization(self):
        assert stability_bound(0.5, 0.5, 1.0, 1.0, 100, 0.5) == pytest.approx(
            min(1.0 / 100, 1.0 / (100 * 0.5))
        )

    def test_scalar_example(self):
        assert stability_bound(0.5, 1.0, 1.0, 1.0, 100, 0.5) == pytest.approx(1.01)

    def test_large_validation_set_limit(self):
        big = stability_bound(0.5, 1.0, 1.0, 1.0, 10**9, 0.5)
        assert big == pytest.approx(1.0, abs=1e-6)

    def test_nonpositive_lambda_rejected(self):
        with pytest.raises(ValueError):
            stability_bound(0.0, 1.0, 1.0, 1.0, 10, 0.5)


class TestStabilityEmpirically:
    def test_weight_deviation_bound(self, rng):
        # the inner inequality: ||w_l - w_l'|| <= (l' - l) / (l l')
        for _ in range(15):
            ds = dataset(rng, n=25)
            lam = float(rng.uniform(0.05, 0.5))
            lam_p = lam + float(rng.uniform(0.05, 1.0))
            w1 = train_erm(ds, lam).w
            w2 = train_erm(ds, lam_p).w
            assert np.linalg.norm(w1 - w2) <= (lam_p - lam) / (lam * lam_p) + 1e-6

    def test_score_change_within_bound(self, rng):
        L, g_star = loss_constants("ramp")
        for _ in range(15):
            train = dataset(rng, n=30)
            val = dataset(rng, n=12)
            x_new, y_new = make_classification(1, 3, rng)
            neighbor = val.with_swapped(int(rng.integers(val.size)), x_new[0], y_new[0])
            lam = float(rng.uniform(0.1, 0.6))
            lam_p = lam + float(rng.uniform(0.05, 0.8))
            f_v = validation_score(train_erm(train, lam), val, "ramp")
            f_vp = validation_score(train_erm(train, lam_p), neighbor, "ramp")
            bound = stability_bound(lam, lam_p, L, g_star, val.size, lam)
            assert abs(f_v - f_vp) <= bound + 1e-9
