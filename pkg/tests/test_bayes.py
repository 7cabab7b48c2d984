from fractions import Fraction

import numpy as np
import pytest

from kddids.bayes import (
    BayesModel,
    EmptyTrainingSet,
    SmoothingConfig,
    SpecMismatch,
    fit,
    posterior,
    predict_dist,
    predict_proba,
)
from kddids.encoding import BAYES, Bins, EncodedDataset, EncoderSpec, FINE, OneHot


def make_bayes_dataset(X, y, n_categories, n_classes=2):
    """Bayes-mode dataset from raw category-index matrices.

    n_categories[f] counts the reserved unseen slot, mirroring OneHot rules.
    """
    X = np.asarray(X, dtype=np.int32)
    classes = tuple(f"c{i}" for i in range(n_classes))
    rules = tuple(
        OneHot(tuple(f"v{j}" for j in range(v - 1))) for v in n_categories
    )
    spec = EncoderSpec(BAYES, rules, classes, FINE, "synthetic")
    return EncodedDataset(spec, np.asarray(y, dtype=np.int32), matrix=X)


class TestFit:
    def test_smoothed_priors(self):
        # classes (3, 1), alpha 1 -> priors (4/6, 2/6)
        ds = make_bayes_dataset([[0]] * 4, [0, 0, 0, 1], n_categories=[2])
        model = fit(ds, SmoothingConfig(alpha=1.0))
        np.testing.assert_allclose(
            np.exp(model.log_priors), [4 / 6, 2 / 6], atol=1e-12
        )

    def test_alpha_zero_gives_maximum_likelihood(self):
        X = [[0], [1], [0], [0]]
        y = [0, 0, 1, 1]
        ds = make_bayes_dataset(X, y, n_categories=[3])
        model = fit(ds, SmoothingConfig(alpha=0.0))
        np.testing.assert_allclose(np.exp(model.log_priors), [0.5, 0.5])
        # class 0 saw values (0, 1): P(v=0|c0) = 1/2
        np.testing.assert_allclose(
            np.exp(model.cond_log[0][0]), [0.5, 0.5, 0.0], atol=1e-12
        )

    def test_unseen_value_smoothing(self):
        # V=4, count_h=6, alpha=1, value never seen with h -> 1/10
        X = [[0]] * 6 + [[1]] * 2
        y = [0] * 6 + [1] * 2
        ds = make_bayes_dataset(X, y, n_categories=[4])
        model = fit(ds, SmoothingConfig(alpha=1.0))
        assert np.exp(model.cond_log[0][0, 3]) == pytest.approx(1 / 10)

    def test_rows_sum_to_one(self, rng):
        X = rng.integers(0, 3, size=(30, 4)).astype(np.int32)
        y = rng.integers(0, 3, size=30).astype(np.int32)
        ds = make_bayes_dataset(X, y, n_categories=[4, 4, 4, 4], n_classes=3)
        model = fit(ds, SmoothingConfig(alpha=1.0))
        for table in model.cond_log:
            np.testing.assert_allclose(
                np.exp(table).sum(axis=1), 1.0, atol=1e-12
            )
        assert np.exp(model.log_priors).sum() == pytest.approx(1.0, abs=1e-12)

    def test_all_probabilities_positive_with_alpha(self, rng):
        X = rng.integers(0, 2, size=(10, 2)).astype(np.int32)
        y = rng.integers(0, 2, size=10).astype(np.int32)
        ds = make_bayes_dataset(X, y, n_categories=[3, 3])
        model = fit(ds, SmoothingConfig(alpha=0.5))
        for table in model.cond_log:
            assert np.isfinite(table).all()

    def test_permutation_invariant(self, rng):
        X = rng.integers(0, 3, size=(20, 3)).astype(np.int32)
        y = rng.integers(0, 2, size=20).astype(np.int32)
        perm = rng.permutation(20)
        a = fit(make_bayes_dataset(X, y, [4, 4, 4]))
        b = fit(make_bayes_dataset(X[perm], y[perm], [4, 4, 4]))
        np.testing.assert_array_equal(a.log_priors, b.log_priors)
        for ta, tb in zip(a.cond_log, b.cond_log):
            np.testing.assert_array_equal(ta, tb)

    def test_empty_training_set(self):
        ds = make_bayes_dataset(np.zeros((0, 1)), [], n_categories=[2])
        with pytest.raises(EmptyTrainingSet):
            fit(ds)


class TestPosterior:
    def test_symmetric_model_gives_uniform(self):
        ds = make_bayes_dataset([[0], [1]], [0, 1], n_categories=[3])
        model = fit(ds, SmoothingConfig(alpha=1.0))
        # symmetric by construction: value 2 unseen for both classes
        np.testing.assert_allclose(posterior(model, [2]), [0.5, 0.5], atol=1e-12)

    def test_two_class_hand_example(self):
        # priors (.5, .5); P(v|c0)=0.9, P(v|c1)=0.3 -> posterior (0.75, 0.25)
        model = BayesModel(
            log_priors=np.log([0.5, 0.5]),
            cond_log=[np.log([[0.9, 0.1], [0.3, 0.7]])],
            n_categories=(2,),
            alpha=0.0,
            class_order=("c0", "c1"),
        )
        np.testing.assert_allclose(posterior(model, [0]), [0.75, 0.25], atol=1e-12)

    def test_sums_to_one(self, rng):
        X = rng.integers(0, 4, size=(25, 3)).astype(np.int32)
        y = rng.integers(0, 3, size=25).astype(np.int32)
        ds = make_bayes_dataset(X, y, [5, 5, 5], n_classes=3)
        model = fit(ds)
        for row in X:
            assert posterior(model, row).sum() == pytest.approx(1.0, abs=1e-12)

    def test_log_space_matches_direct_product(self, rng):
        X = rng.integers(0, 3, size=(40, 4)).astype(np.int32)
        y = rng.integers(0, 2, size=40).astype(np.int32)
        ds = make_bayes_dataset(X, y, [4, 4, 4, 4])
        model = fit(ds)
        priors = np.exp(model.log_priors)
        tables = [np.exp(t) for t in model.cond_log]
        for row in X[:10]:
            direct = priors.copy()
            for f, v in enumerate(row):
                direct *= tables[f][:, v]
            direct /= direct.sum()
            np.testing.assert_allclose(posterior(model, row), direct, atol=1e-9)

    def test_spec_mismatch(self):
        ds = make_bayes_dataset([[0], [1]], [0, 1], [3])
        model = fit(ds)
        with pytest.raises(SpecMismatch):
            posterior(model, [0, 1])
        with pytest.raises(SpecMismatch):
            posterior(model, [7])


class TestPredict:
    def test_argmax_scale_invariant(self):
        model = BayesModel(
            log_priors=np.log([0.5, 0.5]),
            cond_log=[np.log([[0.9, 0.1], [0.3, 0.7]])],
            n_categories=(2,),
            alpha=0.0,
            class_order=("c0", "c1"),
        )
        scaled = BayesModel(
            log_priors=model.log_priors + np.log(3.0),  # same ratios
            cond_log=model.cond_log,
            n_categories=(2,),
            alpha=0.0,
            class_order=("c0", "c1"),
        )
        row = [0]
        assert np.argmax(predict_dist(model, row)) == np.argmax(
            predict_dist(scaled, row)
        )
        np.testing.assert_allclose(
            predict_dist(model, row), predict_dist(scaled, row), atol=1e-12
        )

    def test_against_exact_rational_oracle(self, rng):
        # 20-record table, checked against Fraction arithmetic end to end
        n, n_features = 20, 3
        n_cats = [3, 4, 2]
        X = np.column_stack(
            [rng.integers(0, v - 1, size=n) for v in n_cats]
        ).astype(np.int32)
        y = rng.integers(0, 2, size=n).astype(np.int32)
        alpha = 1
        ds = make_bayes_dataset(X, y, n_cats)
        model = fit(ds, SmoothingConfig(alpha=float(alpha)))

        class_counts = [int((y == c).sum()) for c in (0, 1)]
        priors = [
            Fraction(class_counts[c] + alpha, n + alpha * 2) for c in (0, 1)
        ]

        def conditional(f, v, c):
            count = int(((X[:, f] == v) & (y == c)).sum())
            return Fraction(count + alpha, class_counts[c] + alpha * n_cats[f])

        for i in range(n):
            numerators = []
            for c in (0, 1):
                p = priors[c]
                for f in range(n_features):
                    p *= conditional(f, int(X[i, f]), c)
                numerators.append(p)
            total = sum(numerators)
            exact = [float(p / total) for p in numerators]
            got = predict_dist(model, X[i])
            np.testing.assert_allclose(got, exact, atol=1e-12)
            assert int(np.argmax(got)) == (0 if numerators[0] >= numerators[1] else 1)

    def test_single_class_degenerate(self):
        ds = make_bayes_dataset([[0], [1], [0]], [0, 0, 0], [3], n_classes=1)
        model = fit(ds)
        np.testing.assert_allclose(predict_dist(model, [0]), [1.0])

    def test_monotone_in_feature_count(self):
        # adding supporting observations for class 0 raises its posterior
        def model_with(extra):
            X = [[0]] * (4 + extra) + [[1]] * 4
            y = [0] * (4 + extra) + [1] * 4
            return fit(make_bayes_dataset(X, y, [3]))

        base = posterior(model_with(0), [0])[0]
        more = posterior(model_with(4), [0])[0]
        assert more > base

    def test_batch_matches_single(self, rng):
        X = rng.integers(0, 3, size=(15, 2)).astype(np.int32)
        y = rng.integers(0, 2, size=15).astype(np.int32)
        ds = make_bayes_dataset(X, y, [4, 4])
        model = fit(ds)
        batch = predict_proba(model, ds)
        for i in range(15):
            np.testing.assert_allclose(
                batch[i], predict_dist(model, X[i]), atol=1e-12
            )
