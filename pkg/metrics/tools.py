"""
Метрики качества и справедливости: Acc, F1/Recall по группам, ΔF1,
EOD попарно и один-против-всех, EOD_max, дисперсия групповых потерь.

Соглашения:
- F1 класса без предсказанных и без фактических примеров равен 0 и помечается;
- для многоклассовых задач EOD считается для каждого класса как положительного,
  в бинарной задаче положительный класс один (1);
- в summary неопределённые EOD (группа без положительных примеров) пропускаются
  и подсчитываются в undefined_eod_skipped.
"""
import math
from itertools import combinations
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix

from core.exceptions import DataError, NumericalError, UndefinedRateError
from metrics.schemas import EvalBundle, Grouping, MetricsReport


def class_set(bundle: EvalBundle) -> List[int]:
    if bundle.num_classes is not None:
        return list(range(bundle.num_classes))
    return [int(c) for c in np.unique(bundle.labels)]


def _class_scores(predictions: np.ndarray, labels: np.ndarray, classes: Sequence[int]) -> Dict[int, tuple[float, float, float, bool]]:
    """Для каждого класса (one-vs-rest): precision, recall, F1 и флаг пустого знаменателя"""
    universe = sorted(set(classes) | set(np.unique(labels).tolist()) | set(np.unique(predictions).tolist()))
    position = {c: i for i, c in enumerate(universe)}
    cm = confusion_matrix(labels, predictions, labels=universe)
    out = {}
    for c in classes:
        i = position[c]
        tp = int(cm[i, i])
        fn = int(cm[i, :].sum()) - tp
        fp = int(cm[:, i].sum()) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[c] = (precision, recall, f1, tp + fp + fn == 0)
    return out


def per_group_f1_recall(bundle: EvalBundle, grouping: Grouping = Grouping.BY_CLASS) -> tuple[Dict[int, float], Dict[int, float]]:
    """
    by-class: F1 и recall каждого класса (one-vs-rest).
    by-sensitive: для каждой чувствительной группы макро-среднее F1 и recall
    по классам, присутствующим среди её меток.
    """
    if len(bundle) == 0:
        raise DataError("per_group_f1_recall: пустой набор")
    if grouping == Grouping.BY_CLASS:
        scores = _class_scores(bundle.predictions, bundle.labels, class_set(bundle))
        return {c: s[2] for c, s in scores.items()}, {c: s[1] for c, s in scores.items()}

    if bundle.sensitive is None:
        raise DataError("per_group_f1_recall: нет чувствительных id для группировки by-sensitive")
    f1, recall = {}, {}
    for s in np.unique(bundle.sensitive):
        mask = bundle.sensitive == s
        labels, predictions = bundle.labels[mask], bundle.predictions[mask]
        scores = _class_scores(predictions, labels, [int(c) for c in np.unique(labels)])
        f1[int(s)] = sum(v[2] for v in scores.values()) / len(scores)
        recall[int(s)] = sum(v[1] for v in scores.values()) / len(scores)
    return f1, recall


def _require_sensitive(bundle: EvalBundle) -> np.ndarray:
    if bundle.sensitive is None:
        raise DataError("EOD: в наборе нет чувствительных id")
    return bundle.sensitive


def true_positive_rate(bundle: EvalBundle, positive_class: int, mask: np.ndarray) -> float:
    positives = mask & (bundle.labels == positive_class)
    n = int(positives.sum())
    if n == 0:
        raise UndefinedRateError(f"TPR не определён: нет положительных примеров класса {positive_class} в группе")
    return int((bundle.predictions[positives] == positive_class).sum()) / n


def eod_pair(bundle: EvalBundle, positive_class: int, s1: int, s2: int) -> float:
    """|P(Ŷ=1|Y=1,S=s1) − P(Ŷ=1|Y=1,S=s2)|"""
    sensitive = _require_sensitive(bundle)
    return abs(
        true_positive_rate(bundle, positive_class, sensitive == s1)
        - true_positive_rate(bundle, positive_class, sensitive == s2)
    )


def eod_one_vs_all(bundle: EvalBundle, positive_class: int, s_i: int) -> float:
    """|P(Ŷ=1|Y=1,S=s_i) − P(Ŷ=1|Y=1,S≠s_i)|"""
    sensitive = _require_sensitive(bundle)
    return abs(
        true_positive_rate(bundle, positive_class, sensitive == s_i)
        - true_positive_rate(bundle, positive_class, sensitive != s_i)
    )


def eod_max(bundle: EvalBundle, positive_class: int) -> float:
    sensitive = _require_sensitive(bundle)
    return max(eod_one_vs_all(bundle, positive_class, int(s)) for s in np.unique(sensitive))


def positive_classes(bundle: EvalBundle) -> List[int]:
    classes = class_set(bundle)
    if len(classes) == 2:
        return [classes[1]]
    return classes


def group_loss_variance(per_group_loss: Sequence[float] | Dict[int, float], divisor: str = "population") -> float:
    """Дисперсия средних групповых потерь; population делит на |𝒢|, sample на |𝒢|−1"""
    values = [float(v) for v in (per_group_loss.values() if isinstance(per_group_loss, dict) else per_group_loss)]
    if len(values) < 2:
        raise DataError(f"group_loss_variance: нужно минимум 2 группы, получено {len(values)}")
    if divisor not in ("population", "sample"):
        raise DataError(f"group_loss_variance: неизвестный делитель {divisor}")
    try:
        mean = sum(values) / len(values)
        squares = sum((v - mean) ** 2 for v in values)
    except OverflowError:
        squares = math.inf
    if not math.isfinite(squares):
        raise NumericalError(f"group_loss_variance: дисперсия не конечна при потерях {values}")
    return squares / (len(values) if divisor == "population" else len(values) - 1)


def summary(bundle: EvalBundle) -> MetricsReport:
    if len(bundle) == 0:
        raise DataError("summary: пустой набор")
    scores = _class_scores(bundle.predictions, bundle.labels, class_set(bundle))
    f1 = {c: s[2] for c, s in scores.items()}
    recall = {c: s[1] for c, s in scores.items()}

    eod_pairwise: Dict[str, float] = {}
    eod_ova: Dict[str, float] = {}
    skipped = 0
    eod_max_value: Optional[float] = None
    if bundle.sensitive is not None:
        groups = [int(s) for s in np.unique(bundle.sensitive)]
        for pc in positive_classes(bundle):
            for s1, s2 in combinations(groups, 2):
                try:
                    eod_pairwise[f"{pc}:{s1}-{s2}"] = eod_pair(bundle, pc, s1, s2)
                except UndefinedRateError:
                    skipped += 1
            for s in groups:
                try:
                    eod_ova[f"{pc}:{s}"] = eod_one_vs_all(bundle, pc, s)
                except UndefinedRateError:
                    skipped += 1
        if eod_ova:
            eod_max_value = max(eod_ova.values())

    return MetricsReport(
        accuracy=float(np.mean(bundle.predictions == bundle.labels)),
        f1=f1,
        recall=recall,
        f1_min=min(f1.values()),
        recall_min=min(recall.values()),
        delta_f1=max(f1.values()) - min(f1.values()),
        eod_pairwise=eod_pairwise,
        eod_one_vs_all=eod_ova,
        eod_max=eod_max_value,
        undefined_f1_groups=[c for c, s in scores.items() if s[3]],
        undefined_eod_skipped=skipped,
        num_samples=len(bundle),
    )
