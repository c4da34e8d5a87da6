import numpy as np
import pytest
from numpy.testing import assert_array_equal

from conftest import finite_difference, near_kink, relative_error, writable
from core.exceptions import DataError, NumericalError, ShapeError, UsageError
from core.rng import SeededRng
from data.schemas import GroupKey
from fair.schemas import FairObjectiveConfig
from fair.tools import (
    deviation_coefficients,
    group_mean,
    objective,
    objective_gradient,
    partition_by_group,
    partition_ids,
    variance_penalty,
)
from model.classifier import MlpClassifier, forward
from model.schemas import BatchGradients, Mode
from model.tools import backward_subset, cross_entropy

LAMBDAS = (0.1, 1.0, 10.0)


def _fair_instance(seed: int):
    rng = SeededRng(seed)
    while True:
        widths = [int(w) for w in rng.integers(2, 9, size=2)]
        batch = int(rng.integers(6, 17))
        groups = int(rng.integers(2, 5))
        mode = Mode.LORA if seed % 2 else Mode.FFT
        model = MlpClassifier.create(3, widths, 3, rng.derive(0))
        if mode == Mode.LORA:
            model = model.with_adapters(1, rng.derive(1), init_std=0.3)
            for layer in model.hidden:
                layer.adapter.b[...] = rng.derive(2).normal(layer.adapter.b.shape, std=0.3)
        x = rng.derive(3).normal((batch, 3))
        y = rng.derive(4).integers(0, 3, size=batch)
        ids = np.concatenate([np.arange(groups), rng.derive(5).integers(0, groups, size=batch - groups)])
        if not near_kink(model, x):
            return model, x, y, ids, LAMBDAS[seed % 3]
        rng = rng.derive(77)


def _fair_gradient(model, x, y, ids, lam):
    indices = np.arange(x.shape[0])
    overall = backward_subset(model, x, y, indices)
    partitions = partition_ids(ids, indices)
    group_grads = {g: backward_subset(model, x, y, idx) for g, idx in partitions.items()}
    per_group = {g: gg.loss for g, gg in group_grads.items()}
    return objective_gradient(overall, group_grads, per_group, lam), overall, group_grads, per_group


def _full_objective(model, x, y, ids, lam):
    """J = L + λ·Σ(L_g − mean)², среднее пересчитывается от текущих параметров"""
    loss, per_sample = cross_entropy(forward(model, x), y)
    losses = [per_sample[ids == g].mean() for g in np.unique(ids)]
    mean = sum(losses) / len(losses)
    return loss + lam * sum((v - mean) ** 2 for v in losses)


@pytest.mark.parametrize("seed", range(20))
def test_objective_gradient_matches_finite_differences(seed):
    model, x, y, ids, lam = _fair_instance(seed)
    fair, *_ = _fair_gradient(model, x, y, ids, lam)
    assert fair.loss == pytest.approx(_full_objective(model, x, y, ids, lam), rel=1e-12)
    for name, tensor in writable(model).items():
        numeric = finite_difference(lambda: _full_objective(model, x, y, ids, lam), tensor)
        assert relative_error(fair.grads[name], numeric) <= 1e-6, (seed, name)


@pytest.mark.parametrize("seed", range(4))
def test_dropping_mean_derivative_is_exact(seed):
    model, x, y, ids, lam = _fair_instance(seed)
    fair, overall, group_grads, per_group = _fair_gradient(model, x, y, ids, lam)
    mean = sum(per_group.values()) / len(per_group)
    for name in fair.keys():
        d_mean = sum(g.grads[name] for g in group_grads.values()) / len(group_grads)
        with_mean = overall.grads[name] + lam * sum(
            2.0 * (per_group[g] - mean) * (group_grads[g].grads[name] - d_mean) for g in group_grads
        )
        assert relative_error(fair.grads[name], with_mean) <= 1e-10


def test_zero_lambda_returns_overall_bitwise():
    model, x, y, ids, _ = _fair_instance(0)
    fair, overall, *_ = _fair_gradient(model, x, y, ids, 0.0)
    for name in overall.keys():
        assert_array_equal(fair.grads[name], overall.grads[name])


def test_single_group_has_no_penalty():
    model, x, y, _, _ = _fair_instance(1)
    ids = np.zeros(x.shape[0], dtype=np.int64)
    fair, overall, *_ = _fair_gradient(model, x, y, ids, 5.0)
    for name in overall.keys():
        assert_array_equal(fair.grads[name], overall.grads[name])


def test_variance_penalty_hand_values():
    assert variance_penalty([1.0, 3.0]) == pytest.approx(2.0)
    assert variance_penalty({0: 0.2, 1: 0.2, 2: 0.2}) == 0.0
    assert group_mean([0.7, 0.7]) == 0.7
    coefficients = deviation_coefficients({0: 1.0, 1: 2.0, 2: 6.0})
    assert sum(coefficients.values()) == pytest.approx(0.0, abs=1e-12)


def test_objective_report():
    report = objective(0.5, {0: 0.4, 1: 0.8}, lam=2.0)
    assert report.penalty == pytest.approx(0.08)
    assert report.objective == pytest.approx(0.5 + 2.0 * 0.08)
    assert report.groups == [0, 1]
    with pytest.raises(UsageError):
        objective(0.5, [0.1, 0.2], lam=-1.0)


def test_partition_ignores_absent_groups(tiny_dataset):
    parts = partition_by_group(tiny_dataset, GroupKey.SENSITIVE, [0, 1, 4])
    assert parts == {0: [0, 1, 4]}
    with pytest.raises(DataError):
        partition_ids(np.array([0, 1]), [])


def test_objective_gradient_validates_shapes():
    overall = BatchGradients(grads={"w": np.zeros((2, 2))}, loss=1.0)
    bad = BatchGradients(grads={"w": np.zeros((3, 2))}, loss=1.0)
    with pytest.raises(ShapeError):
        objective_gradient(overall, {0: bad}, {0: 1.0}, 1.0)
    with pytest.raises(ShapeError):
        objective_gradient(overall, {0: overall}, {1: 1.0}, 1.0)


def test_config_lambda_alias():
    config = FairObjectiveConfig.model_validate({"lambda": 3.0})
    assert config.lam == 3.0
    with pytest.raises(ValueError):
        FairObjectiveConfig.model_validate({"lambda": -1.0})


def test_objective_never_decreases_with_lambda():
    for i in range(20):
        rng = SeededRng(41, i)
        losses = dict(enumerate(rng.uniform(int(rng.integers(1, 6))) * 3.0))
        values = [objective(1.2, losses, lam).objective for lam in (0.0, 0.01, 0.1, 1.0, 10.0, 100.0)]
        assert values == sorted(values)


def test_overflowing_penalty_is_numerical_error():
    with pytest.raises(NumericalError):
        variance_penalty([1e200, -1e200])
    with pytest.raises(NumericalError):
        variance_penalty([np.inf, 1.0])
