import numpy as np
import pytest

from kddids.metrics import (
    ConfusionMatrix,
    EmptyMatrix,
    LengthMismatch,
    UnknownClass,
    accuracy,
    class_rates,
    confusion,
    error_scores,
    kappa,
    predictions_from_proba,
    roc_auc,
)


class TestConfusion:
    def test_perfect_predictions_are_diagonal(self):
        m = confusion(["a", "b", "a"], ["a", "b", "a"], ["a", "b"])
        np.testing.assert_array_equal(m.counts, [[2, 0], [0, 1]])

    def test_total_equals_sequence_length(self, rng):
        n = 50
        pred = rng.integers(0, 3, n)
        truth = rng.integers(0, 3, n)
        m = confusion(pred, truth, ["a", "b", "c"])
        assert m.total == n

    def test_eight_instance_hand_tally(self):
        truth = ["a", "a", "a", "b", "b", "c", "c", "c"]
        pred = ["a", "b", "a", "b", "b", "a", "c", "b"]
        m = confusion(pred, truth, ["a", "b", "c"])
        # manual tally: rows = truth a/b/c
        np.testing.assert_array_equal(
            m.counts, [[2, 1, 0], [0, 2, 0], [1, 1, 1]]
        )

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion(["a"], ["a", "b"], ["a", "b"])

    def test_unknown_class(self):
        with pytest.raises(UnknownClass):
            confusion(["z"], ["a"], ["a", "b"])


class TestAccuracy:
    def test_published_holdout_numbers(self):
        # 55,865 correct of 60,000 -> 93.1083%
        counts = np.diag([55865, 0])
        counts[0, 1] = 4135
        m = ConfusionMatrix(counts, ("a", "b"))
        frac, correct, incorrect = accuracy(m)
        assert correct == 55865
        assert incorrect == 4135
        assert frac * 100 == pytest.approx(93.1083, abs=5e-5)

    def test_all_correct(self):
        m = ConfusionMatrix(np.diag([7, 3]), ("a", "b"))
        assert accuracy(m) == (1.0, 10, 0)

    def test_three_of_four(self):
        m = ConfusionMatrix(np.array([[2, 1], [0, 1]]), ("a", "b"))
        frac, correct, incorrect = accuracy(m)
        assert (frac, correct, incorrect) == (0.75, 3, 1)

    def test_empty(self):
        m = ConfusionMatrix(np.zeros((2, 2)), ("a", "b"))
        with pytest.raises(EmptyMatrix):
            accuracy(m)


class TestKappa:
    def test_perfect_diagonal(self):
        m = ConfusionMatrix(np.diag([30, 20]), ("a", "b"))
        assert kappa(m) == pytest.approx(1.0)

    def test_constant_predictor_is_zero(self):
        # everything predicted "a" against a (50, 50) truth split
        m = ConfusionMatrix(np.array([[50, 0], [50, 0]]), ("a", "b"))
        assert kappa(m) == pytest.approx(0.0)

    def test_hand_arithmetic_2x2(self):
        # [[20,5],[10,15]]: p_o = 0.7, p_e = (25*30 + 25*20)/2500 = 0.5
        m = ConfusionMatrix(np.array([[20, 5], [10, 15]]), ("a", "b"))
        assert kappa(m) == pytest.approx((0.7 - 0.5) / 0.5, abs=1e-12)

    def test_hand_arithmetic_3x3(self):
        # rows/cols both (60, 40, 25); p_o = 0.8, p_e = 5825/15625
        m = ConfusionMatrix(
            np.array([[50, 5, 5], [10, 30, 0], [0, 5, 20]]), ("a", "b", "c")
        )
        p_e = 5825 / 15625
        assert kappa(m) == pytest.approx((0.8 - p_e) / (1 - p_e), abs=1e-12)

    def test_not_above_accuracy(self, rng):
        for _ in range(20):
            counts = rng.integers(0, 30, (3, 3))
            m = ConfusionMatrix(counts, ("a", "b", "c"))
            if m.total == 0:
                continue
            frac, _, _ = accuracy(m)
            assert kappa(m) <= frac + 1e-12


class TestErrorScores:
    def test_crisp_correct_is_zero(self):
        probs = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert error_scores(probs, [0, 1]) == (0.0, 0.0)

    def test_hand_value(self):
        # truth class 0, prediction (0.8, 0.2): MAE = RMSE = 0.2
        mae, rmse = error_scores(np.array([[0.8, 0.2]]), [0])
        assert mae == pytest.approx(0.2)
        assert rmse == pytest.approx(0.2)

    def test_zero_iff_crisp_and_correct(self, rng):
        probs = rng.dirichlet([1, 1, 1], size=10)
        truth = rng.integers(0, 3, 10)
        mae, rmse = error_scores(probs, truth)
        crisp_correct = all(
            probs[i, truth[i]] == 1.0 for i in range(10)
        )
        assert (mae == 0.0) == crisp_correct
        assert (rmse == 0.0) == crisp_correct

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            error_scores(np.zeros((2, 2)), [0])


class TestClassRates:
    def test_perfect_classifier(self):
        m = ConfusionMatrix(np.diag([10, 5, 5]), ("a", "b", "c"))
        r = class_rates(m)
        np.testing.assert_allclose(r.tp_rate, 1.0)
        np.testing.assert_allclose(r.fp_rate, 0.0)
        np.testing.assert_allclose(r.precision, 1.0)
        assert r.weighted_tp == pytest.approx(1.0)

    def test_hand_computed_3x3(self):
        m = ConfusionMatrix(
            np.array([[50, 5, 5], [10, 30, 0], [0, 5, 20]]), ("a", "b", "c")
        )
        r = class_rates(m)
        np.testing.assert_allclose(r.tp_rate, [50 / 60, 30 / 40, 20 / 25])
        np.testing.assert_allclose(r.fp_rate, [10 / 65, 10 / 85, 5 / 100])
        np.testing.assert_allclose(r.precision, [50 / 60, 30 / 40, 20 / 25])
        assert r.weighted_fp == pytest.approx(0.12149321266968326, abs=1e-12)

    def test_weighted_tp_equals_accuracy(self, rng):
        for _ in range(20):
            counts = rng.integers(0, 40, (4, 4))
            m = ConfusionMatrix(counts, ("a", "b", "c", "d"))
            if m.total == 0:
                continue
            frac, _, _ = accuracy(m)
            assert class_rates(m).weighted_tp == pytest.approx(frac, abs=1e-12)

    def test_zero_support_class(self):
        m = ConfusionMatrix(np.array([[5, 0], [0, 0]]), ("a", "b"))
        r = class_rates(m)
        assert r.tp_rate[1] == 0.0
        assert r.supports[1] == 0


def oracle_pairwise_auc(scores, positives):
    """O(n^2) oracle: mean over positive-negative pairs, ties count 1/2."""
    pos = [s for s, p in zip(scores, positives) if p]
    neg = [s for s, p in zip(scores, positives) if not p]
    if not pos or not neg:
        return None
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestRocAuc:
    def test_separated_scores_give_one(self):
        probs = np.array([[0.9], [0.8], [0.2], [0.1]])
        truth = np.array([0, 0, 1, 1])
        aucs, weighted = roc_auc(probs, truth, ["pos"])
        assert aucs[0] == pytest.approx(1.0)

    def test_identical_scores_give_half(self):
        probs = np.full((6, 1), 0.3)
        truth = np.array([0, 1, 0, 1, 0, 1])
        aucs, _ = roc_auc(probs, truth, ["pos"])
        assert aucs[0] == pytest.approx(0.5)

    def test_six_instance_hand_case(self):
        scores = np.array([0.9, 0.7, 0.7, 0.4, 0.3, 0.1])[:, None]
        truth = np.array([0, 0, 1, 0, 1, 1])
        aucs, _ = roc_auc(scores, truth, ["pos"])
        expected = oracle_pairwise_auc(scores[:, 0].tolist(),
                                       (truth == 0).tolist())
        assert aucs[0] == pytest.approx(expected, abs=1e-12)

    def test_matches_pairwise_oracle_up_to_200(self, rng):
        for trial in range(10):
            n = int(rng.integers(10, 201))
            k = 3
            probs = rng.dirichlet([1.0] * k, size=n)
            probs = np.round(probs, 2)  # force plenty of ties
            truth = rng.integers(0, k, n)
            aucs, weighted = roc_auc(probs, truth, ["a", "b", "c"])
            total_w = 0.0
            acc_w = 0.0
            for c in range(k):
                expected = oracle_pairwise_auc(
                    probs[:, c].tolist(), (truth == c).tolist()
                )
                if expected is None:
                    assert aucs[c] == 0.0
                    continue
                assert aucs[c] == pytest.approx(expected, abs=1e-12)
                support = int((truth == c).sum())
                total_w += support
                acc_w += support * expected
            if total_w:
                assert weighted == pytest.approx(acc_w / total_w, abs=1e-12)

    def test_absent_class_weighs_zero(self):
        probs = np.array([[0.5, 0.5], [0.7, 0.3]])
        truth = np.array([0, 0])
        aucs, weighted = roc_auc(probs, truth, ["a", "b"])
        assert aucs[1] == 0.0
        assert aucs[0] == 0.0  # no negatives for "a" either
        assert weighted == 0.0

    def test_permutation_invariant(self, rng):
        n = 40
        probs = rng.dirichlet([1, 1], size=n)
        truth = rng.integers(0, 2, n)
        perm = rng.permutation(n)
        a = roc_auc(probs, truth, ["x", "y"])
        b = roc_auc(probs[perm], truth[perm], ["x", "y"])
        np.testing.assert_allclose(a[0], b[0], atol=1e-12)
        assert a[1] == pytest.approx(b[1], abs=1e-12)


class TestPredictionsFromProba:
    def test_argmax_with_tie_toward_first(self):
        probs = np.array([[0.4, 0.4, 0.2], [0.1, 0.6, 0.3]])
        np.testing.assert_array_equal(predictions_from_proba(probs), [0, 1])
