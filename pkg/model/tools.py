from typing import Sequence

import numpy as np

from core.exceptions import DataError, ShapeError
from core.linalg import Matrix, Vector, ensure_finite, matmul
from lora.adapter import route_gradient
from model.classifier import MlpClassifier, relu
from model.schemas import BatchGradients, Mode


def _check_labels(logits: Matrix, labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"cross_entropy: логиты {logits.shape} и метки {labels.shape} не согласованы")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        raise DataError(f"cross_entropy: метки вне диапазона [0, {logits.shape[1]})")
    return labels.astype(np.int64)


def log_softmax(logits: Matrix) -> Matrix:
    shift = logits.max(axis=1, keepdims=True)
    shifted = logits - shift
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy(logits: Matrix, labels: np.ndarray) -> tuple[float, Vector]:
    """Softmax cross-entropy через стабилизированный log-sum-exp: (среднее, по примерам)"""
    labels = _check_labels(logits, labels)
    per_sample = -log_softmax(logits)[np.arange(labels.size), labels]
    ensure_finite(per_sample, "cross_entropy")
    return float(per_sample.mean()), per_sample


def backward_subset(model: MlpClassifier, features: Matrix, labels: np.ndarray, subset: Sequence[int]) -> BatchGradients:
    """
    Градиенты средней cross-entropy по подвыборке subset для каждого обучаемого тензора.

    Тензоры LoRA получают градиент ∂L/∂θ, прокинутый через route_gradient.
    """
    subset = np.asarray(subset, dtype=np.int64)
    if subset.size == 0:
        raise DataError("backward_subset: пустая подвыборка, групповая потеря не определена")
    x = features[subset]
    y = np.asarray(labels)[subset]
    m = subset.size

    inputs, pre_activations = [], []
    h = x
    for layer in model.hidden:
        inputs.append(h)
        z = layer.apply(h)
        pre_activations.append(z)
        h = relu(z)
    logits = model.head.apply(h)
    loss, _ = cross_entropy(logits, y)

    probs = np.exp(log_softmax(logits))
    d_logits = probs
    d_logits[np.arange(m), y] -= 1.0
    d_logits /= m

    grads = {
        "head.weight": matmul(h.T, d_logits),
        "head.bias": np.add.reduce(d_logits, axis=0),
    }
    d_h = matmul(d_logits, model.head.weight.T)
    for i in range(len(model.hidden) - 1, -1, -1):
        layer = model.hidden[i]
        d_z = d_h * (pre_activations[i] > 0.0)
        d_theta = matmul(inputs[i].T, d_z)
        if model.mode == Mode.FFT:
            grads[f"layers.{i}.weight"] = d_theta
            grads[f"layers.{i}.bias"] = np.add.reduce(d_z, axis=0)
        elif layer.adapter is not None:
            grads[f"layers.{i}.lora_a"], grads[f"layers.{i}.lora_b"] = route_gradient(layer.adapter, d_theta)
        if i > 0:
            d_h = matmul(d_z, layer.effective().T)

    ordered = {name: ensure_finite(grads[name], name) for name in model.trainable_tensors()}
    return BatchGradients(grads=ordered, loss=loss)


def group_losses(model_logits: Matrix, labels: np.ndarray, partitions: dict[int, list[int]]) -> dict[int, float]:
    """Средние потери по группам (в порядке ключей partitions)"""
    _, per_sample = cross_entropy(model_logits, labels)
    return {g: float(per_sample[np.asarray(idx)].mean()) for g, idx in partitions.items()}
