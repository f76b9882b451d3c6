import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buscad.classify import (
    BENIGN,
    MALIGNANT,
    ClassifierConfig,
    ConfusionMatrix,
    Dataset,
    cross_validate,
    knn_classify,
    metrics,
    select_features,
    svm_train,
    tree_train,
)


def dataset(matrix, labels, names=None, ids=None):
    matrix = np.asarray(matrix, dtype=float)
    names = names or [f"f{i}" for i in range(matrix.shape[1])]
    ids = ids or [f"c{i}" for i in range(matrix.shape[0])]
    return Dataset(matrix=matrix, labels=list(labels), feature_names=names, case_ids=ids)


def blobs(n_per_class=50, dims=4, gap=20.0, seed=0):
    rng = np.random.default_rng(seed)
    benign = rng.normal(0.0, 1.0, (n_per_class, dims))
    malignant = rng.normal(gap, 1.0, (n_per_class, dims))
    return dataset(
        np.vstack([benign, malignant]),
        [BENIGN] * n_per_class + [MALIGNANT] * n_per_class,
    )


class TestDataset:
    def test_row_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            dataset([[1.0], [2.0]], [BENIGN])

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            dataset([[np.inf]], [BENIGN])

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError):
            dataset([[1.0]], ["weird"])


class TestMetrics:
    def test_first_reference_row(self):
        m = metrics(ConfusionMatrix(147, 4, 3, 96))
        assert round(m["accuracy"] * 100, 2) == 97.2
        assert round(m["sensitivity"] * 100, 2) == 97.35
        assert round(m["specificity"] * 100, 2) == 96.97
        assert round(m["ppv"] * 100, 2) == 98.0
        assert round(m["npv"] * 100, 2) == 96.0

    def test_second_reference_row(self):
        m = metrics(ConfusionMatrix(53, 3, 1, 106))
        assert round(m["accuracy"] * 100, 2) == 97.55
        assert round(m["sensitivity"] * 100, 2) == 94.64
        assert round(m["specificity"] * 100, 2) == 99.07
        assert round(m["ppv"] * 100, 2) == 98.15
        assert round(m["npv"] * 100, 2) == 97.25

    def test_degenerate_denominators_reported_as_none(self):
        m = metrics(ConfusionMatrix(1, 0, 0, 0))
        assert m["accuracy"] == 1.0 and m["sensitivity"] == 1.0 and m["ppv"] == 1.0
        assert m["specificity"] is None and m["npv"] is None

    def test_counts_validated(self):
        with pytest.raises(ValueError):
            ConfusionMatrix(-1, 0, 0, 2)
        with pytest.raises(ValueError):
            ConfusionMatrix(0, 0, 0, 0)

    @settings(max_examples=60, deadline=None)
    @given(
        tp=st.integers(0, 50),
        fn=st.integers(0, 50),
        fp=st.integers(0, 50),
        tn=st.integers(0, 50),
    )
    def test_defined_values_live_in_unit_interval(self, tp, fn, fp, tn):
        if tp + fn + fp + tn == 0:
            return
        for value in metrics(ConfusionMatrix(tp, fn, fp, tn)).values():
            assert value is None or 0.0 <= value <= 1.0

    def test_accuracy_is_prevalence_weighted(self):
        cm = ConfusionMatrix(30, 10, 5, 55)
        m = metrics(cm)
        pos = (cm.tp + cm.fn) / cm.total
        assert m["accuracy"] == pytest.approx(
            pos * m["sensitivity"] + (1 - pos) * m["specificity"]
        )


class TestSelectFeatures:
    def test_label_indicator_ranked_first(self):
        rng = np.random.default_rng(1)
        labels = [BENIGN] * 10 + [MALIGNANT] * 10
        indicator = np.array([0.0] * 10 + [1.0] * 10)
        noise = rng.normal(size=(20, 3))
        data = dataset(np.column_stack([noise[:, 0], indicator, noise[:, 1:]]), labels)
        reduced, chosen = select_features(data, k=2)
        assert chosen[0] == 1
        assert reduced.feature_names[0] == "f1"

    def test_duplicate_column_skipped(self):
        rng = np.random.default_rng(2)
        labels = [BENIGN] * 12 + [MALIGNANT] * 12
        strong = np.array([0.0] * 12 + [1.0] * 12) + rng.normal(0, 0.05, 24)
        weak = rng.normal(size=24) + 0.3 * strong
        data = dataset(np.column_stack([strong, strong, weak]), labels)
        _, chosen = select_features(data, k=2)
        assert 0 in chosen and 1 not in chosen

    def test_informative_beats_noise(self):
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            labels = [BENIGN] * 20 + [MALIGNANT] * 20
            informative = np.concatenate([rng.normal(0, 1, 20), rng.normal(3, 1, 20)])
            noise = rng.normal(size=(40, 4))
            data = dataset(np.column_stack([noise[:, :2], informative, noise[:, 2:]]), labels)
            _, chosen = select_features(data, k=1)
            wins += chosen[0] == 2
        assert wins >= 95

    def test_returns_original_columns(self):
        rng = np.random.default_rng(3)
        labels = [BENIGN] * 8 + [MALIGNANT] * 8
        matrix = rng.normal(size=(16, 5)) + 100.0
        data = dataset(matrix, labels)
        reduced, chosen = select_features(data, k=3)
        np.testing.assert_array_equal(reduced.matrix, matrix[:, chosen])

    def test_constant_column_scores_zero(self):
        labels = [BENIGN] * 6 + [MALIGNANT] * 6
        indicator = np.array([0.0] * 6 + [1.0] * 6)
        flat = np.full(12, 7.0)
        data = dataset(np.column_stack([flat, indicator]), labels)
        _, chosen = select_features(data, k=1)
        assert chosen == (1,)

    def test_k_validated(self):
        data = blobs(10)
        with pytest.raises(ValueError):
            select_features(data, k=0)
        with pytest.raises(ValueError):
            select_features(data, k=5)


class TestKnn:
    def test_nearest_point_wins(self):
        train = dataset([[0.0], [10.0]], [BENIGN, MALIGNANT])
        assert knn_classify(train, np.array([1.0]), k=1) == BENIGN

    def test_majority_of_three(self):
        train = dataset([[0.0], [1.0], [10.0]], [BENIGN, BENIGN, MALIGNANT])
        assert knn_classify(train, np.array([4.0]), k=3) == BENIGN

    def test_tie_breaks_to_nearest(self):
        train = dataset([[4.0], [0.0]], [MALIGNANT, BENIGN])
        assert knn_classify(train, np.array([3.0]), k=2) == MALIGNANT

    def test_k_bounds(self):
        train = dataset([[0.0], [1.0]], [BENIGN, MALIGNANT])
        with pytest.raises(ValueError):
            knn_classify(train, np.array([0.5]), k=0)
        with pytest.raises(ValueError):
            knn_classify(train, np.array([0.5]), k=3)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 5_000), query=st.floats(-50, 50))
    def test_full_k_returns_global_majority(self, seed, query):
        rng = np.random.default_rng(seed)
        n_b = int(rng.integers(1, 8))
        n_m = int(rng.integers(1, 8))
        if n_b == n_m:
            n_b += 1
        train = dataset(
            rng.normal(size=(n_b + n_m, 1)),
            [BENIGN] * n_b + [MALIGNANT] * n_m,
        )
        majority = BENIGN if n_b > n_m else MALIGNANT
        assert knn_classify(train, np.array([query]), k=n_b + n_m) == majority


class TestSvm:
    def test_two_point_max_margin(self):
        train = dataset([[-1.0], [1.0]], [BENIGN, MALIGNANT])
        model = svm_train(train, c=1e6)
        # Boundary in raw units: where the decision function crosses zero.
        boundary = -model.bias / model.weights[0] * model.std[0] + model.mean[0]
        assert abs(boundary) < 1e-3
        assert model.predict(np.array([-0.2])) == BENIGN
        assert model.predict(np.array([0.2])) == MALIGNANT

    def test_scaling_invariance(self):
        rng = np.random.default_rng(4)
        base = blobs(20, dims=3, gap=4.0, seed=4)
        scaled = dataset(base.matrix * 10.0, base.labels)
        queries = rng.normal(2.0, 3.0, (12, 3))
        m1 = svm_train(base, c=10.0)
        m2 = svm_train(scaled, c=10.0)
        for q in queries:
            assert m1.predict(q) == m2.predict(q * 10.0)

    def test_separable_data_fits_exactly(self):
        data = blobs(25, dims=2, gap=8.0, seed=5)
        model = svm_train(data, c=1000.0)
        got = [model.predict(row) for row in data.matrix]
        assert got == list(data.labels)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            svm_train(dataset([[0.0], [1.0]], [BENIGN, BENIGN]), c=1.0)

    def test_label_swap_flips_the_decision_function(self):
        data = blobs(15, dims=2, gap=5.0, seed=6)
        swapped = dataset(
            data.matrix,
            [MALIGNANT if l == BENIGN else BENIGN for l in data.labels],
        )
        m1 = svm_train(data, c=10.0)
        m2 = svm_train(swapped, c=10.0)
        np.testing.assert_allclose(m2.weights, -m1.weights, atol=1e-6)
        assert m2.bias == pytest.approx(-m1.bias, abs=1e-6)


class TestTree:
    def test_threshold_separable_is_depth_one(self):
        train = dataset(
            [[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]],
            [BENIGN] * 3 + [MALIGNANT] * 3,
        )
        model = tree_train(train, max_depth=5)
        assert model.depth == 1
        assert [model.predict(row) for row in train.matrix] == list(train.labels)

    def test_pure_data_is_a_leaf(self):
        train = dataset([[0.0], [1.0], [2.0], [3.0], [4.0]], [BENIGN] * 5)
        model = tree_train(train, max_depth=5)
        assert model.depth == 0
        assert model.predict(np.array([99.0])) == BENIGN

    def test_unsplittable_rows_predict_majority(self):
        train = dataset(
            [[1.0]] * 6,
            [MALIGNANT] * 4 + [BENIGN] * 2,
        )
        model = tree_train(train, max_depth=3)
        assert model.predict(np.array([1.0])) == MALIGNANT

    def test_depth_limit_respected(self):
        rng = np.random.default_rng(8)
        matrix = rng.normal(size=(60, 3))
        labels = [BENIGN if rng.random() < 0.5 else MALIGNANT for _ in range(60)]
        model = tree_train(dataset(matrix, labels), max_depth=2)
        assert model.depth <= 2


class TestCrossValidate:
    def test_pooled_counts_cover_every_case(self):
        data = blobs(30, seed=9)
        cm, _ = cross_validate(data, ClassifierConfig("knn"), folds=10, seed=1)
        assert cm.total == 60

    def test_same_seed_reproduces(self):
        data = blobs(30, seed=10)
        cfg = ClassifierConfig("svm", svm_c=10.0)
        a, _ = cross_validate(data, cfg, folds=5, seed=3)
        b, _ = cross_validate(data, cfg, folds=5, seed=3)
        assert (a.tp, a.fn, a.fp, a.tn) == (b.tp, b.fn, b.fp, b.tn)

    @pytest.mark.parametrize("name", ["knn", "svm", "tree"])
    def test_distant_blobs_are_easy(self, name):
        data = blobs(50, seed=11)
        cm, _ = cross_validate(data, ClassifierConfig(name, select_k=4), folds=10, seed=2)
        acc = (cm.tp + cm.tn) / cm.total
        assert acc == 1.0

    def test_stratified_folds_balance_classes(self):
        from buscad.classify import _fold_assignment

        labels = [BENIGN] * 37 + [MALIGNANT] * 23
        folds = _fold_assignment(labels, folds=10, seed=4, sequential=False)
        assert sorted(np.concatenate(folds).tolist()) == list(range(60))
        global_pos = 23 / 60
        for members in folds:
            pos = sum(labels[i] == MALIGNANT for i in members)
            assert abs(pos - global_pos * len(members)) <= 1.0

    def test_sequential_holdout_mode(self):
        data = blobs(30, seed=12)
        cfg = ClassifierConfig("knn", sequential_holdout=True)
        cm, _ = cross_validate(data, cfg, folds=6, seed=5)
        assert cm.total == 60
        from buscad.classify import _fold_assignment

        folds = _fold_assignment(data.labels, folds=6, seed=5, sequential=True)
        flat = np.concatenate(folds)
        assert flat.tolist() == sorted(flat.tolist())

    def test_small_class_rejected(self):
        data = dataset(
            np.random.default_rng(13).normal(size=(12, 2)),
            [BENIGN] * 9 + [MALIGNANT] * 3,
        )
        with pytest.raises(ValueError, match="class"):
            cross_validate(data, ClassifierConfig("knn"), folds=5, seed=0)

    def test_reported_features_come_from_full_data(self):
        rng = np.random.default_rng(14)
        n = 60
        labels = [BENIGN] * 30 + [MALIGNANT] * 30
        signal = np.concatenate([rng.normal(0, 1, 30), rng.normal(6, 1, 30)])
        data = dataset(
            np.column_stack([rng.normal(size=(n, 2)), signal, rng.normal(size=n)]),
            labels,
        )
        _, chosen = cross_validate(
            data, ClassifierConfig("tree", select_k=2), folds=5, seed=6
        )
        assert len(chosen) == 2
        assert "f2" in chosen
        assert all(name in data.feature_names for name in chosen)
