"""Metrics, folds, selection, and nested CV behavior."""

from __future__ import annotations

import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rangetriage import evaluation as ev
from rangetriage.classifiers import Dataset
from rangetriage.classifiers.linear import fit_l1_logistic


def pairwise_auc(y, scores):
    """O(n^2) pair counting: P(random positive outranks random negative)."""
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=float)
    pos = scores[y == 1]
    neg = scores[y == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestAuc:
    def test_matches_pair_counting_on_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(4, 40))
            y = rng.integers(0, 2, size=n)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            # coarse scores force plenty of ties
            scores = rng.integers(0, 6, size=n) / 5.0
            got = ev.compute_auc(y, scores)
            assert abs(got - pairwise_auc(y, scores)) < 1e-12

    def test_perfect_ordering(self):
        assert ev.compute_auc([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_all_scores_equal(self):
        assert ev.compute_auc([0, 1, 0, 1], [0.4] * 4) == 0.5

    def test_single_class_undefined(self):
        assert ev.compute_auc([1, 1, 1], [0.1, 0.2, 0.3]) is None

    def test_invariant_under_increasing_transforms(self):
        rng = np.random.default_rng(23)
        y = rng.integers(0, 2, size=50)
        y[:2] = [0, 1]
        scores = rng.integers(0, 64, size=50) / 64.0
        base = ev.compute_auc(y, scores)
        for transform in (lambda s: s / 2.0, lambda s: 4.0 * s, lambda s: s + 2.0):
            assert ev.compute_auc(y, transform(scores)) == base


class TestMetrics:
    def test_published_decision_tree_row(self):
        counts = ev.ConfusionCounts(tp=869, fn=131, tn=900, fp=100)
        report = ev.compute_metrics(counts)
        assert report.sensitivity == pytest.approx(0.869, abs=1e-12)
        assert report.specificity == pytest.approx(0.900, abs=1e-12)
        assert report.balanced_accuracy == pytest.approx(0.8845, abs=1e-12)

    def test_zero_positive_denominator_flags_undefined(self):
        report = ev.compute_metrics(ev.ConfusionCounts(tp=0, fn=0, tn=3, fp=1))
        assert report.sensitivity is None
        assert report.balanced_accuracy is None
        assert report.specificity == 0.75

    def test_perfect_predictions(self):
        report = ev.compute_metrics(ev.ConfusionCounts(tp=5, fn=0, tn=7, fp=0))
        assert (report.sensitivity, report.specificity, report.balanced_accuracy) == (
            1.0,
            1.0,
            1.0,
        )

    @given(
        st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50)
    )
    def test_balanced_accuracy_identity(self, tp, fn, tn, fp):
        report = ev.compute_metrics(ev.ConfusionCounts(tp, fn, tn, fp))
        if report.sensitivity is None or report.specificity is None:
            assert report.balanced_accuracy is None
        else:
            assert (
                abs(
                    report.balanced_accuracy
                    - (report.sensitivity + report.specificity) / 2.0
                )
                < 1e-12
            )
            assert 0.0 <= report.balanced_accuracy <= 1.0

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ev.ConfusionCounts(tp=-1, fn=0, tn=0, fp=0)

    def test_from_labels(self):
        counts = ev.ConfusionCounts.from_labels([1, 1, 0, 0], [1, 0, 0, 1])
        assert (counts.tp, counts.fn, counts.tn, counts.fp) == (1, 1, 1, 1)


class TestStratifiedKfold:
    def assert_invariants(self, y, assignment, k):
        y = np.asarray(y)
        sizes = [int((assignment == f).sum()) for f in range(k)]
        assert max(sizes) - min(sizes) <= 1
        for label in (0, 1):
            class_sizes = [
                int(((assignment == f) & (y == label)).sum()) for f in range(k)
            ]
            assert max(class_sizes) - min(class_sizes) <= 1

    def test_published_cohort_arithmetic(self):
        y = np.array([1] * 63 + [0] * 181)
        assignment = ev.stratified_kfold(y, 10, seed=1)
        self.assert_invariants(y, assignment, 10)
        for f in range(10):
            fold = assignment == f
            assert int(fold.sum()) in (24, 25)
            assert int(y[fold].sum()) in (6, 7)

    def test_two_by_two(self):
        y = [0, 1, 0, 1]
        assignment = ev.stratified_kfold(y, 2, seed=0)
        for f in range(2):
            members = np.asarray(y)[assignment == f]
            assert sorted(members.tolist()) == [0, 1]

    def test_deterministic(self):
        y = np.array([0, 1] * 20)
        a = ev.stratified_kfold(y, 5, seed=42)
        b = ev.stratified_kfold(y, 5, seed=42)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        y = np.array([0, 1] * 30)
        a = ev.stratified_kfold(y, 5, seed=1)
        b = ev.stratified_kfold(y, 5, seed=2)
        assert not np.array_equal(a, b)

    def test_too_many_folds_rejected(self):
        with pytest.raises(ValueError):
            ev.stratified_kfold([0, 1, 0], 4, seed=0)
        with pytest.raises(ValueError):
            ev.stratified_kfold([0, 1, 0], 1, seed=0)

    def test_small_class_warns(self):
        y = np.array([1] + [0] * 9)
        with pytest.warns(RuntimeWarning):
            ev.stratified_kfold(y, 3, seed=0)

    @given(st.integers(2, 6), st.integers(0, 1000))
    def test_invariants_hold_generally(self, k, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2 * k, 8 * k))
        y = rng.integers(0, 2, size=n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assignment = ev.stratified_kfold(y, k, seed)
        self.assert_invariants(y, assignment, k)


def planted_dataset(seed=31, n=200):
    """Columns 0 and 1 carry the label; column 2 is pure noise."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, 3))
    y = ((X[:, 0] + X[:, 1]) > 1.0).astype(int)
    return X, y


class TestL1Selection:
    def test_noise_column_dropped(self):
        X, y = planted_dataset()
        selected = ev.select_features_l1(X, y, folds=3, seed=5)
        assert 2 not in selected
        assert 0 in selected and 1 in selected

    def test_zero_penalty_retains_all(self):
        X, y = planted_dataset(n=120)
        selected = ev.select_features_l1(X, y, penalties=(0.0,), folds=3, seed=5)
        assert selected == [0, 1, 2]

    def test_duplicate_columns_not_both_kept_at_high_penalty(self):
        rng = np.random.default_rng(41)
        base = rng.uniform(size=20)
        X = np.column_stack([base, base, rng.uniform(size=20), rng.uniform(size=20)])
        y = (base > 0.5).astype(float)
        theta = fit_l1_logistic(X, y, penalty=1.0)
        survivors = [j for j in (0, 1) if abs(theta[j]) > ev.COEF_CUTOFF]
        assert len(survivors) <= 1

    def test_empty_selection_falls_back_to_all(self):
        rng = np.random.default_rng(43)
        X = rng.uniform(size=(30, 4))
        y = rng.integers(0, 2, size=30)
        y[:2] = [0, 1]
        selected = ev.select_features_l1(X, y, penalties=(50.0,), folds=3, seed=1)
        assert selected == [0, 1, 2, 3]


def blob_dataset(seed=3, n_per_class=30):
    rng = np.random.default_rng(seed)
    X = np.vstack(
        [
            rng.normal(size=(n_per_class, 2)),
            rng.normal(size=(n_per_class, 2)) + 3.0,
        ]
    )
    y = np.array([0] * n_per_class + [1] * n_per_class)
    ids = [f"s{i:03d}" for i in range(len(y))]
    return Dataset(X, y, ids, [0, 1])


class TestNestedCv:
    def test_separable_data_scores_high(self):
        result = ev.nested_cv(blob_dataset(), "decision_tree", outer_k=5, inner_k=3, seed=7)
        assert result.macro.balanced_accuracy >= 0.95
        assert result.outer_k == 5 and result.inner_k == 3

    def test_every_row_in_exactly_one_test_fold(self):
        ds = blob_dataset()
        assignment = ev.stratified_kfold(ds.y, 5, seed=7)
        counts = np.zeros(len(ds.y), dtype=int)
        for f in range(5):
            counts[assignment == f] += 1
        assert (counts == 1).all()

    def test_fold_results_carry_choices(self):
        result = ev.nested_cv(blob_dataset(), "knn", outer_k=5, inner_k=3, seed=7)
        assert len(result.folds) == 5
        for fold in result.folds:
            assert fold.hyperparameters in [dict(c) for c in ev.DEFAULT_GRIDS["knn"]]
            assert set(fold.selected_features) <= {0, 1}
            assert len(fold.scaler_mins) == 2
            metrics = fold.metrics
            for value in (metrics.sensitivity, metrics.specificity, metrics.auc):
                assert value is None or 0.0 <= value <= 1.0

    def test_macro_is_mean_of_defined_folds(self):
        result = ev.nested_cv(blob_dataset(), "knn", outer_k=5, inner_k=3, seed=7)
        values = [f.metrics.balanced_accuracy for f in result.folds]
        assert result.macro.balanced_accuracy == pytest.approx(
            np.mean([v for v in values if v is not None])
        )

    def test_deterministic(self):
        first = ev.nested_cv(blob_dataset(), "decision_tree", outer_k=5, inner_k=3, seed=9)
        second = ev.nested_cv(blob_dataset(), "decision_tree", outer_k=5, inner_k=3, seed=9)
        assert first.to_dict() == second.to_dict()

    def test_baselines_skip_selection_and_tuning(self):
        result = ev.nested_cv(blob_dataset(), "baseline_majority", outer_k=5, inner_k=3, seed=7)
        for fold in result.folds:
            assert fold.hyperparameters == {}
            assert fold.selected_features == [0, 1]

    def test_undefined_fold_metrics_skipped_with_warning(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(size=(30, 2))
        y = np.zeros(30, dtype=int)
        y[:3] = 1
        ds = Dataset(X, y, [f"s{i}" for i in range(30)], [0, 1])
        with pytest.warns(RuntimeWarning):
            result = ev.nested_cv(ds, "baseline_majority", outer_k=5, inner_k=3, seed=3)
        undefined = [f for f in result.folds if f.metrics.sensitivity is None]
        assert undefined
        assert result.macro.specificity == 1.0

    def test_leakage_probe(self):
        ds = blob_dataset(seed=12, n_per_class=25)
        baseline = ev.nested_cv(ds, "knn", outer_k=5, inner_k=3, seed=21)
        assignment = ev.stratified_kfold(ds.y, 5, seed=21)
        probe = 0
        X_perturbed = ds.X.copy()
        X_perturbed[assignment == probe] += 37.0
        perturbed = ev.nested_cv(
            Dataset(X_perturbed, ds.y, ds.student_ids, ds.feature_ids),
            "knn",
            outer_k=5,
            inner_k=3,
            seed=21,
        )
        before = baseline.folds[probe]
        after = perturbed.folds[probe]
        assert before.scaler_mins == after.scaler_mins
        assert before.scaler_maxs == after.scaler_maxs
        assert before.selected_features == after.selected_features
        assert before.hyperparameters == after.hyperparameters


class TestCompareModels:
    def report(self):
        kinds = ["knn", "decision_tree", "baseline_majority", "baseline_random"]
        return ev.compare_models(blob_dataset(), kinds, seed=5, outer_k=5, inner_k=3)

    def test_sorted_descending_with_baselines_last(self):
        report = self.report()
        kinds = [row["kind"] for row in report.rows]
        assert kinds[-2:] == ["baseline_majority", "baseline_random"]
        real_scores = [row["balanced_accuracy"] for row in report.rows[:-2]]
        assert real_scores == sorted(real_scores, reverse=True)

    def test_majority_baseline_scores_exactly_half(self):
        report = self.report()
        majority = next(r for r in report.rows if r["kind"] == "baseline_majority")
        assert majority["sensitivity"] == 0.0
        assert majority["specificity"] == 1.0
        assert majority["balanced_accuracy"] == 0.5

    def test_deterministic_row_order(self):
        assert [r["kind"] for r in self.report().rows] == [
            r["kind"] for r in self.report().rows
        ]

    def test_serialization_shapes(self):
        report = self.report()
        doc = report.to_dict()
        assert set(doc) == {"seed", "rows", "models"}
        assert set(doc["models"]) == {
            "knn",
            "decision_tree",
            "baseline_majority",
            "baseline_random",
        }
        csv_text = report.to_csv()
        header, *lines = csv_text.strip().splitlines()
        assert header == "kind,sensitivity,specificity,balanced_accuracy,auc"
        assert len(lines) == 4
