from typing import Callable, Dict

import numpy as np
import pytest

from core.rng import SeededRng
from data.schemas import Dataset, SyntheticSpec
from data.synth import synth_generate
from model.classifier import MlpClassifier

FD_STEP = 1e-5
KINK_MARGIN = 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def finite_difference(loss: Callable[[], float], tensor: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Центральные разности loss() по каждому элементу tensor (меняется на месте и восстанавливается)"""
    grad = np.zeros_like(tensor)
    for idx in np.ndindex(tensor.shape):
        original = tensor[idx]
        tensor[idx] = original + step
        plus = loss()
        tensor[idx] = original - step
        minus = loss()
        tensor[idx] = original
        grad[idx] = (plus - minus) / (2 * step)
    return grad


def writable(model: MlpClassifier) -> Dict[str, np.ndarray]:
    """Обучаемые тензоры модели; для конечных разностей они должны быть изменяемыми"""
    tensors = model.trainable_tensors()
    for t in tensors.values():
        assert t.flags.writeable
    return tensors


def near_kink(model: MlpClassifier, features: np.ndarray) -> bool:
    h = features
    for layer in model.hidden:
        z = layer.apply(h)
        if np.min(np.abs(z)) < KINK_MARGIN:
            return True
        h = np.maximum(z, 0.0)
    return False


@pytest.fixture
def rng() -> SeededRng:
    return SeededRng(1234)


@pytest.fixture
def tiny_dataset() -> Dataset:
    return Dataset(
        features=np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0], [0.5, 0.5], [1.5, 2.5]]),
        labels=np.array([0, 1, 0, 1, 0, 1]),
        groups=np.array([0, 1, 0, 1, 0, 1]),
        sensitive=np.array([0, 0, 1, 1, 0, 1]),
    )


@pytest.fixture
def imbalanced_spec() -> SyntheticSpec:
    return SyntheticSpec(
        num_classes=3,
        num_sensitive=2,
        counts=[[60, 40], [20, 15], [8, 7]],
        feature_dim=4,
        class_separation=2.0,
        spurious_strength=0.5,
        seed=7,
    )


@pytest.fixture
def imbalanced_dataset(imbalanced_spec) -> Dataset:
    return synth_generate(imbalanced_spec)
