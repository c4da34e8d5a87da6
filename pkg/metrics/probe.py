"""
Чувствительная точность: линейная проба (мультиномиальная логистическая регрессия)
на замороженных предпоследних признаках предсказывает чувствительный id.
Чем ниже точность, тем меньше утечка чувствительного признака.
"""
import logging
import math
from typing import Optional

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from core.exceptions import UsageError
from core.rng import SeededRng
from data.schemas import Dataset
from model.classifier import MlpClassifier, penultimate_features


def probe_accuracy(features: np.ndarray, sensitive: np.ndarray, rng: SeededRng, probe_fraction: float = 0.5) -> Optional[float]:
    """Обучает пробу на доле probe_fraction, возвращает точность на остатке"""
    if not 0 < probe_fraction < 1:
        raise UsageError(f"probe_fraction должна быть в (0, 1), получено {probe_fraction}")
    order = rng.permutation(sensitive.shape[0])
    n_fit = math.floor(sensitive.shape[0] * probe_fraction)
    fit_idx, eval_idx = order[:n_fit], order[n_fit:]
    if eval_idx.size == 0 or np.unique(sensitive[fit_idx]).size < 2:
        logging.warning("Sensitive probe skipped: fewer than two sensitive groups in the probe split")
        return None
    probe = make_pipeline(StandardScaler(), LogisticRegression(max_iter=1000, random_state=rng.seed))
    probe.fit(features[fit_idx], sensitive[fit_idx])
    return float(probe.score(features[eval_idx], sensitive[eval_idx]))


def sensitive_accuracy(model: MlpClassifier, dataset: Dataset, rng: SeededRng, probe_fraction: float = 0.5) -> Optional[float]:
    if dataset.sensitive is None:
        logging.info("Sensitive accuracy absent: dataset has no sensitive ids")
        return None
    features = penultimate_features(model, dataset.features)
    return probe_accuracy(features, np.asarray(dataset.sensitive), rng, probe_fraction)
