from itertools import combinations

import numpy as np
import pytest

from core.exceptions import DataError, NumericalError, UndefinedRateError
from core.rng import SeededRng
from metrics.convert import SCALAR_FIELDS, report_to_row
from metrics.probe import probe_accuracy
from metrics.schemas import EvalBundle, Grouping
from metrics.tools import (
    eod_max,
    eod_one_vs_all,
    eod_pair,
    group_loss_variance,
    per_group_f1_recall,
    summary,
)


def _counts(predictions, labels, c):
    tp = fp = fn = 0
    for p, y in zip(predictions, labels):
        if p == c and y == c:
            tp += 1
        elif p == c:
            fp += 1
        elif y == c:
            fn += 1
    return tp, fp, fn


def oracle_f1_recall(predictions, labels, classes):
    f1, recall = {}, {}
    for c in classes:
        tp, fp, fn = _counts(predictions, labels, c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1[c] = 2 * precision * rec / (precision + rec) if precision + rec else 0.0
        recall[c] = rec
    return f1, recall


def oracle_tpr(predictions, labels, sensitive, positive, members):
    hits = total = 0
    for p, y, s in zip(predictions, labels, sensitive):
        if s in members and y == positive:
            total += 1
            hits += p == positive
    return None if total == 0 else hits / total


def random_bundle(rng: SeededRng) -> EvalBundle:
    n = int(rng.integers(2, 201))
    classes = int(rng.integers(2, 11))
    groups = int(rng.integers(1, 7))
    return EvalBundle(
        predictions=rng.integers(0, classes, size=n),
        labels=rng.integers(0, classes, size=n),
        sensitive=rng.integers(0, groups, size=n),
    )


def test_summary_matches_counting_oracle():
    for i in range(1000):
        bundle = random_bundle(SeededRng(2024, i))
        report = summary(bundle)
        preds, labels, sens = bundle.predictions.tolist(), bundle.labels.tolist(), bundle.sensitive.tolist()
        classes = sorted(set(labels))

        assert report.accuracy == sum(p == y for p, y in zip(preds, labels)) / len(labels)
        f1, recall = oracle_f1_recall(preds, labels, classes)
        assert report.f1 == f1
        assert report.recall == recall
        assert report.f1_min == min(f1.values())
        assert report.recall_min == min(recall.values())
        assert report.delta_f1 == max(f1.values()) - min(f1.values())

        positives = [classes[1]] if len(classes) == 2 else classes
        groups = sorted(set(sens))
        skipped = 0
        for pc in positives:
            for s1, s2 in combinations(groups, 2):
                a = oracle_tpr(preds, labels, sens, pc, {s1})
                b = oracle_tpr(preds, labels, sens, pc, {s2})
                key = f"{pc}:{s1}-{s2}"
                if a is None or b is None:
                    skipped += 1
                    assert key not in report.eod_pairwise
                else:
                    assert report.eod_pairwise[key] == abs(a - b)
            for s in groups:
                a = oracle_tpr(preds, labels, sens, pc, {s})
                b = oracle_tpr(preds, labels, sens, pc, set(groups) - {s})
                key = f"{pc}:{s}"
                if a is None or b is None:
                    skipped += 1
                    assert key not in report.eod_one_vs_all
                else:
                    assert report.eod_one_vs_all[key] == abs(a - b)
        assert report.undefined_eod_skipped == skipped
        if report.eod_one_vs_all:
            assert report.eod_max == max(report.eod_one_vs_all.values())
        else:
            assert report.eod_max is None


def test_summary_is_permutation_invariant():
    for i in range(50):
        rng = SeededRng(31, i)
        bundle = random_bundle(rng)
        order = rng.derive(1).permutation(len(bundle))
        shuffled = EvalBundle(
            predictions=bundle.predictions[order],
            labels=bundle.labels[order],
            sensitive=bundle.sensitive[order],
        )
        assert summary(shuffled) == summary(bundle)


def test_accuracy_never_rises_as_predictions_degrade():
    rng = SeededRng(32)
    labels = rng.integers(0, 4, size=60)
    predictions = labels.copy()
    previous = summary(EvalBundle(predictions=predictions, labels=labels)).accuracy
    assert previous == 1.0
    for i in rng.derive(1).permutation(60):
        predictions[i] = (labels[i] + 1) % 4
        current = summary(EvalBundle(predictions=predictions.copy(), labels=labels)).accuracy
        assert current <= previous
        previous = current
    assert previous == 0.0


def test_eod_structure_on_random_bundles():
    checked = 0
    for i in range(300):
        rng = SeededRng(7, i)
        n = int(rng.integers(10, 120))
        bundle = EvalBundle(
            predictions=rng.integers(0, 3, size=n),
            labels=rng.integers(0, 3, size=n),
            sensitive=rng.integers(0, 2, size=n),
        )
        for pc in range(3):
            try:
                pair = eod_pair(bundle, pc, 0, 1)
            except UndefinedRateError:
                continue
            assert eod_one_vs_all(bundle, pc, 0) == pair
            assert eod_one_vs_all(bundle, pc, 1) == pair
            assert eod_max(bundle, pc) == max(eod_one_vs_all(bundle, pc, 0), eod_one_vs_all(bundle, pc, 1))
            checked += 1
    assert checked > 100


def test_per_group_hand_example():
    bundle = EvalBundle(predictions=np.array([0, 0, 1, 1, 1]), labels=np.array([0, 1, 1, 1, 0]))
    f1, recall = per_group_f1_recall(bundle, Grouping.BY_CLASS)
    assert recall == {0: 0.5, 1: pytest.approx(2 / 3)}
    assert f1[0] == pytest.approx(0.5)
    assert f1[1] == pytest.approx(2 * (2 / 3) * (2 / 3) / (4 / 3))


def test_per_group_by_sensitive_macro_average():
    bundle = EvalBundle(
        predictions=np.array([0, 1, 1, 0]),
        labels=np.array([0, 1, 0, 0]),
        sensitive=np.array([0, 0, 1, 1]),
    )
    f1, recall = per_group_f1_recall(bundle, Grouping.BY_SENSITIVE)
    assert f1[0] == 1.0 and recall[0] == 1.0
    assert recall[1] == 0.5


def test_undefined_f1_is_zero_and_flagged():
    bundle = EvalBundle(predictions=np.array([0, 0]), labels=np.array([0, 0]), num_classes=3)
    report = summary(bundle)
    assert report.f1 == {0: 1.0, 1: 0.0, 2: 0.0}
    assert report.undefined_f1_groups == [1, 2]


def test_eod_undefined_raises():
    bundle = EvalBundle(predictions=np.array([1, 0]), labels=np.array([1, 0]), sensitive=np.array([0, 1]))
    with pytest.raises(UndefinedRateError):
        eod_pair(bundle, 1, 0, 1)


def test_perfect_predictions():
    labels = np.array([0, 1, 2, 1, 0, 2])
    report = summary(EvalBundle(predictions=labels, labels=labels, sensitive=np.array([0, 1, 0, 1, 0, 1])))
    assert report.accuracy == 1.0
    assert report.delta_f1 == 0.0
    assert report.eod_max == 0.0


def test_group_loss_variance_divisors():
    assert group_loss_variance([1.0, 2.0, 3.0]) == pytest.approx(2 / 3)
    assert group_loss_variance({0: 1.0, 1: 2.0, 2: 3.0}, divisor="sample") == pytest.approx(1.0)
    with pytest.raises(DataError):
        group_loss_variance([1.0])
    with pytest.raises(NumericalError):
        group_loss_variance([1e200, -1e200])


def test_probe_chance_level_without_signal():
    rng = SeededRng(11)
    features = rng.normal((4000, 4))
    sensitive = rng.derive(1).integers(0, 2, size=4000)
    accuracy = probe_accuracy(features, sensitive, rng.derive(2))
    assert abs(accuracy - 0.5) <= 0.05


def test_probe_detects_leak():
    rng = SeededRng(12)
    sensitive = rng.integers(0, 2, size=600)
    features = rng.normal((600, 3))
    features[:, 0] += 4.0 * sensitive
    assert probe_accuracy(features, sensitive, rng.derive(1)) > 0.95


def test_probe_single_group_returns_none():
    assert probe_accuracy(np.ones((10, 2)), np.zeros(10, dtype=np.int64), SeededRng(0)) is None


def test_report_row_has_stable_fields():
    labels = np.array([0, 1, 1, 0])
    row = report_to_row(summary(EvalBundle(predictions=labels, labels=labels)))
    for name in SCALAR_FIELDS:
        assert name in row
    assert row["f1.0"] == 1.0
