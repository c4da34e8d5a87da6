"""
Цикл обучения для четырёх методов: FFT, FairFFT, LoRA, FairLoRA.

Один шаг: градиент общей потери батча (и, в fair-режимах, |𝒢| групповых проходов,
собранных через objective_gradient), затем SGD с моментом. После каждой эпохи
(и до первой, epoch 0) модель оценивается; сохраняется лучшая по eval accuracy,
при равенстве раньшая.
"""
import logging
import math
from typing import Dict, List, Optional

import numpy as np

from core.exceptions import DataError, DivergenceError, NumericalError, UsageError
from core.rng import SeededRng
from data.schemas import Dataset, GroupKey
from data.tools import split, stratified_batches
from fair.tools import objective_gradient, partition_ids, variance_penalty
from metrics.probe import sensitive_accuracy
from metrics.schemas import EvalBundle, MetricsReport
from metrics.tools import group_loss_variance, summary
from model.classifier import MlpClassifier, forward
from model.schemas import BatchGradients, Mode
from model.tools import backward_subset, cross_entropy, group_losses
from train.schemas import EpochTrace, RunArtifact, TrainConfig

# Ключи независимых потоков SeededRng внутри одного запуска
INIT_STREAM = 0
ADAPTER_STREAM = 1
HEAD_STREAM = 2
BATCH_STREAM = 3
PROBE_STREAM = 4
SPLIT_STREAM = 5


class SgdMomentum:
    """v ← μ·v + g; p ← p − lr·v, на месте над массивами модели"""

    def __init__(self, params: Dict[str, np.ndarray], learning_rate: float, momentum: float):
        self.params = params
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.velocity = {name: np.zeros_like(p) for name, p in params.items()}

    def step(self, gradients: BatchGradients) -> None:
        for name, param in self.params.items():
            velocity = self.velocity[name]
            velocity *= self.momentum
            velocity += gradients.grads[name]
            param -= self.learning_rate * velocity


def batch_gradients(model: MlpClassifier, dataset: Dataset, indices: np.ndarray, config: TrainConfig) -> BatchGradients:
    overall = backward_subset(model, dataset.features, dataset.labels, indices)
    if not config.fair:
        return overall
    fair = config.objective
    partitions = partition_ids(dataset.ids(fair.group_key), indices)
    group_grads = {g: backward_subset(model, dataset.features, dataset.labels, idx) for g, idx in partitions.items()}
    per_group = {g: grads.loss for g, grads in group_grads.items()}
    return objective_gradient(overall, group_grads, per_group, fair.lam)


def clip_gradients(gradients: BatchGradients, max_norm: float) -> BatchGradients:
    """Масштабирует все тензоры так, чтобы общая L2-норма не превышала max_norm"""
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in gradients.grads.values()))
    if not math.isfinite(norm):
        raise NumericalError("clip_gradients: норма градиента не конечна")
    if norm <= max_norm:
        return gradients
    factor = max_norm / norm
    return BatchGradients(grads={name: g * factor for name, g in gradients.grads.items()}, loss=gradients.loss)


def epoch_trace(epoch: int, model: MlpClassifier, train: Dataset, held_out: Dataset, config: TrainConfig) -> EpochTrace:
    train_logits = forward(model, train.features)
    train_loss, _ = cross_entropy(train_logits, train.labels)
    train_penalty = variance_penalty(group_losses(train_logits, train.labels, partition_ids(train.ids(config.group_key))))

    eval_logits = forward(model, held_out.features)
    eval_loss, _ = cross_entropy(eval_logits, held_out.labels)
    eval_groups = group_losses(eval_logits, held_out.labels, partition_ids(held_out.ids(config.group_key)))
    return EpochTrace(
        epoch=epoch,
        train_loss=train_loss,
        train_penalty=train_penalty,
        train_objective=train_loss + config.lam * train_penalty,
        eval_accuracy=float(np.mean(np.argmax(eval_logits, axis=1) == held_out.labels)),
        eval_loss=eval_loss,
        eval_group_loss_variance=group_loss_variance(eval_groups) if len(eval_groups) > 1 else None,
    )


def _train(model: MlpClassifier, config: TrainConfig, train: Dataset, held_out: Dataset, rng: SeededRng) -> tuple[MlpClassifier, int, List[EpochTrace]]:
    optimizer = SgdMomentum(model.trainable_tensors(), config.learning_rate, config.momentum)
    trace: List[EpochTrace] = []
    best_model, best_epoch = model.copy(), 0

    for epoch in range(config.epochs + 1):
        try:
            if epoch > 0:
                batches = stratified_batches(
                    train, config.batch_size, rng.derive(BATCH_STREAM, epoch), key=config.group_key, coverage=config.coverage
                )
                for indices in batches:
                    gradients = batch_gradients(model, train, indices, config)
                    if config.max_grad_norm is not None:
                        gradients = clip_gradients(gradients, config.max_grad_norm)
                    optimizer.step(gradients)
            entry = epoch_trace(epoch, model, train, held_out, config)
        except (NumericalError, OverflowError, FloatingPointError) as e:
            detail = e.detail if isinstance(e, NumericalError) else str(e)
            raise DivergenceError(
                f"Обучение разошлось на эпохе {epoch} ({config.method}, seed {config.seed}): {detail}",
                trace=trace[-5:],
            )
        trace.append(entry)
        if entry.eval_accuracy > trace[best_epoch].eval_accuracy:
            best_model, best_epoch = model.copy(), epoch
        logging.info(
            f"[{config.method} seed={config.seed}] epoch {epoch}/{config.epochs}: "
            f"train_loss={entry.train_loss:.4f} penalty={entry.train_penalty:.4f} "
            f"eval_acc={entry.eval_accuracy:.4f} eval_loss={entry.eval_loss:.4f}"
        )
    return best_model, best_epoch, trace


def _held_out(config: TrainConfig, dataset: Dataset, eval_dataset: Optional[Dataset], rng: SeededRng) -> tuple[Dataset, Dataset]:
    if eval_dataset is not None:
        return dataset, eval_dataset
    return split(dataset, config.train_fraction, rng.derive(SPLIT_STREAM))


def pretrain(config: TrainConfig, dataset: Dataset, eval_dataset: Optional[Dataset] = None) -> RunArtifact:
    """Полное обучение базовой модели с нуля; её лучший чекпоинт служит θ₀ для fine-tuning"""
    if config.mode != Mode.FFT or config.fair:
        raise UsageError(f"pretrain: нужен режим FFT без fair, получено {config.method}")
    rng = SeededRng(config.seed)
    train, held_out = _held_out(config, dataset, eval_dataset, rng)
    num_classes = max(train.num_classes, held_out.num_classes)
    model = MlpClassifier.create(train.feature_dim, config.hidden_widths, num_classes, rng.derive(INIT_STREAM))
    logging.info(f"Pretraining {config.hidden_widths} MLP on {len(train)} records, {num_classes} classes")
    best_model, best_epoch, trace = _train(model, config, train, held_out, rng)
    return RunArtifact(config=config, model=best_model, best_epoch=best_epoch, trace=trace)


def prepare_model(config: TrainConfig, base: MlpClassifier, num_classes: int, rng: SeededRng) -> MlpClassifier:
    """Стартовая модель fine-tuning: копия θ₀, при необходимости новая голова, в LoRA-режимах адаптеры"""
    model = base.merged()
    if model.num_classes != num_classes:
        logging.info(f"Refitting head: checkpoint has {model.num_classes} classes, dataset has {num_classes}")
        model = model.with_head(num_classes, rng.derive(HEAD_STREAM))
    if config.mode == Mode.LORA:
        model = model.with_adapters(config.rank, rng.derive(ADAPTER_STREAM), config.init_std, config.lora_scale, config.adapt_layers)
    return model


def finetune(config: TrainConfig, base: MlpClassifier, dataset: Dataset, eval_dataset: Optional[Dataset] = None) -> RunArtifact:
    if not config.fair and config.lam > 0:
        raise UsageError(f"finetune: lambda={config.lam} при выключенном fair")
    if config.lam < 0:
        raise UsageError(f"finetune: lambda должна быть >= 0, получено {config.lam}")
    if config.mode == Mode.LORA and (config.rank is None or config.rank < 1):
        raise UsageError("finetune: в режиме LoRA нужен rank >= 1")
    if dataset.feature_dim != base.input_dim:
        raise DataError(f"finetune: ширина признаков {dataset.feature_dim} не совпадает с входом чекпоинта {base.input_dim}")

    rng = SeededRng(config.seed)
    train, held_out = _held_out(config, dataset, eval_dataset, rng)
    model = prepare_model(config, base, max(train.num_classes, held_out.num_classes), rng)
    logging.info(
        f"Fine-tuning {config.method} (lambda={config.lam}, rank={config.rank}, seed={config.seed}): "
        f"{model.count_trainable_parameters()} trainable parameters, {len(train)} train / {len(held_out)} eval records"
    )
    best_model, best_epoch, trace = _train(model, config, train, held_out, rng)
    metrics = evaluate(best_model, held_out, config.group_key, seed=config.seed, probe_fraction=config.probe_fraction)
    logging.info(f"Best epoch {best_epoch}: eval accuracy {trace[best_epoch].eval_accuracy:.4f}")
    return RunArtifact(config=config, model=best_model, best_epoch=best_epoch, trace=trace, metrics=metrics)


def evaluate(
    model: MlpClassifier,
    dataset: Dataset,
    group_key: GroupKey = GroupKey.LABEL,
    seed: int = 0,
    probe_fraction: float = 0.5,
) -> MetricsReport:
    """Полный набор метрик на dataset; параметры модели не меняются"""
    if dataset.feature_dim != model.input_dim:
        raise DataError(f"evaluate: ширина признаков {dataset.feature_dim} не совпадает с входом модели {model.input_dim}")
    logits = forward(model, dataset.features)
    bundle = EvalBundle(
        predictions=np.argmax(logits, axis=1),
        labels=np.asarray(dataset.labels),
        groups=np.asarray(dataset.ids(group_key)),
        sensitive=None if dataset.sensitive is None else np.asarray(dataset.sensitive),
    )
    report = summary(bundle)

    per_group = group_losses(logits, dataset.labels, partition_ids(dataset.ids(group_key)))
    variance = group_loss_variance(per_group) if len(per_group) > 1 else None

    sensitive_acc = sensitive_accuracy(model, dataset, SeededRng(seed).derive(PROBE_STREAM), probe_fraction)
    return report.model_copy(update={"loss_variance_across_groups": variance, "sensitive_accuracy": sensitive_acc})
