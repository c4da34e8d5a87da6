"""
Целевая функция FairLoRA и её аналитический градиент.

Группы, отсутствующие в мини-батче, в штраф не входят: среднее и сумма
берутся только по присутствующим группам.
"""
import math
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from core.exceptions import DataError, NumericalError, ShapeError, UsageError
from data.schemas import Dataset, GroupKey
from fair.schemas import GroupLossReport
from model.schemas import BatchGradients


def partition_ids(ids: np.ndarray, indices: Optional[Sequence[int]] = None) -> Dict[int, list[int]]:
    """Разбиение позиций по id группы; группы по возрастанию, позиции в исходном порядке"""
    ids = np.asarray(ids)
    positions = np.arange(ids.size) if indices is None else np.asarray(indices, dtype=np.int64)
    if positions.size == 0:
        raise DataError("partition_by_group: пустой батч")
    out: Dict[int, list[int]] = {}
    for g in np.unique(ids[positions]):
        out[int(g)] = positions[ids[positions] == g].tolist()
    return out


def partition_by_group(batch: Dataset, key: GroupKey, indices: Optional[Sequence[int]] = None) -> Dict[int, list[int]]:
    return partition_ids(batch.ids(key), indices)


def _as_losses(per_group_loss: Mapping[int, float] | Sequence[float]) -> list[float]:
    values = list(per_group_loss.values()) if isinstance(per_group_loss, Mapping) else list(per_group_loss)
    if not values:
        raise DataError("variance_penalty: нет ни одной группы")
    return [float(v) for v in values]


def group_mean(per_group_loss: Mapping[int, float] | Sequence[float]) -> float:
    values = _as_losses(per_group_loss)
    if min(values) == max(values):
        # равные потери дают точно нулевые отклонения, без ошибки округления среднего
        return values[0]
    return sum(values) / len(values)


def variance_penalty(per_group_loss: Mapping[int, float] | Sequence[float]) -> float:
    """Σ_g (L_g − mean)², без деления на |𝒢|"""
    values = _as_losses(per_group_loss)
    mean = group_mean(values)
    try:
        penalty = sum((v - mean) ** 2 for v in values)
    except OverflowError:
        penalty = math.inf
    if not math.isfinite(penalty):
        raise NumericalError(f"variance_penalty: штраф не конечен при групповых потерях {values}")
    return penalty


def deviation_coefficients(per_group_loss: Mapping[int, float]) -> Dict[int, float]:
    """2·(L_g − mean) для каждой группы; в сумме дают ноль"""
    mean = group_mean(per_group_loss)
    return {g: 2.0 * (float(v) - mean) for g, v in per_group_loss.items()}


def objective(overall_loss: float, per_group_loss: Mapping[int, float] | Sequence[float], lam: float) -> GroupLossReport:
    if lam < 0:
        raise UsageError(f"objective: lambda должна быть >= 0, получено {lam}")
    losses = dict(per_group_loss) if isinstance(per_group_loss, Mapping) else dict(enumerate(per_group_loss))
    penalty = variance_penalty(losses)
    return GroupLossReport(
        groups=list(losses),
        per_group_loss={int(g): float(v) for g, v in losses.items()},
        overall_loss=float(overall_loss),
        penalty=penalty,
        lam=float(lam),
        objective=float(overall_loss) + lam * penalty,
    )


def objective_gradient(
    overall_grad: BatchGradients,
    group_grads: Mapping[int, BatchGradients],
    per_group_loss: Mapping[int, float],
    lam: float,
) -> BatchGradients:
    """
    ∇J[t] = ∇L[t] + λ·Σ_g 2(L_g − mean)·∇L_g[t] для каждого обучаемого тензора t.

    Члены ∂mean/∂θ опущены: они сокращаются, поскольку Σ_g (L_g − mean) = 0.
    """
    if set(group_grads) != set(per_group_loss):
        raise ShapeError(f"objective_gradient: группы градиентов {sorted(group_grads)} и потерь {sorted(per_group_loss)} различаются")
    keys = overall_grad.keys()
    for g, grads in group_grads.items():
        if grads.keys() != keys:
            raise ShapeError(f"objective_gradient: у группы {g} набор тензоров {grads.keys()} вместо {keys}")
        for name in keys:
            if grads.grads[name].shape != overall_grad.grads[name].shape:
                raise ShapeError(
                    f"objective_gradient: тензор {name} группы {g} имеет форму {grads.grads[name].shape}, ожидалась {overall_grad.grads[name].shape}"
                )

    penalty = variance_penalty(per_group_loss)
    loss = overall_grad.loss + lam * penalty
    if lam == 0:
        return BatchGradients(grads={name: g.copy() for name, g in overall_grad.grads.items()}, loss=loss)

    coefficients = deviation_coefficients(per_group_loss)
    combined = {}
    for name in keys:
        acc = np.zeros_like(overall_grad.grads[name])
        for g in sorted(group_grads):
            acc += coefficients[g] * group_grads[g].grads[name]
        combined[name] = overall_grad.grads[name] + lam * acc
    return BatchGradients(grads=combined, loss=loss)
