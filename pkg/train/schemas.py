from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from configs import (
    BATCH_SIZE,
    EPOCHS,
    HIDDEN_LAYERS,
    HIDDEN_WIDTH,
    INIT_STD,
    LEARNING_RATE,
    MOMENTUM,
    PROBE_FRACTION,
    SWEEP_LAMBDAS,
    SWEEP_SEEDS,
    TRAIN_FRACTION,
)
from data.schemas import GroupKey
from fair.schemas import FairObjectiveConfig
from metrics.schemas import MetricsReport
from model.classifier import MlpClassifier
from model.schemas import Mode

METHODS = ("LoRA", "FairLoRA", "FFT", "FairFFT")


class TrainConfig(BaseModel):
    """Гиперпараметры одного запуска; поле lam в файле и CLI называется lambda"""
    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    mode: Mode = Mode.FFT
    fair: bool = False
    lam: float = Field(default=0.0, alias="lambda", ge=0, validate_default=True)
    rank: Optional[int] = Field(default=None, validate_default=True)
    learning_rate: float = Field(default=LEARNING_RATE, gt=0)
    momentum: float = Field(default=MOMENTUM, ge=0, lt=1)
    epochs: int = Field(default=EPOCHS, ge=0)
    batch_size: int = Field(default=BATCH_SIZE, ge=1)
    seed: int = 0
    group_key: GroupKey = GroupKey.LABEL
    selection: Literal["best-eval-accuracy"] = "best-eval-accuracy"
    hidden_widths: List[int] = Field(default_factory=lambda: [HIDDEN_WIDTH] * HIDDEN_LAYERS, min_length=1)
    init_std: float = Field(default=INIT_STD, gt=0)
    lora_scale: float = Field(default=1.0, gt=0)
    adapt_layers: Optional[List[int]] = None
    group_coverage: Optional[bool] = None
    train_fraction: float = Field(default=TRAIN_FRACTION, gt=0, lt=1)
    probe_fraction: float = Field(default=PROBE_FRACTION, gt=0, lt=1)
    max_grad_norm: Optional[float] = Field(default=None, gt=0)

    @field_validator("lam")
    @classmethod
    def _lambda_matches_fair(cls, value: float, info: ValidationInfo) -> float:
        if not np.isfinite(value):
            raise ValueError("lambda должна быть конечной")
        fair = info.data.get("fair", False)
        if fair and value <= 0:
            raise ValueError("при fair: true нужна lambda > 0")
        if not fair and value != 0:
            raise ValueError("lambda > 0 при fair: false: штраф не применяется, включите fair или уберите lambda")
        return value

    @field_validator("rank")
    @classmethod
    def _rank_for_lora(cls, value: Optional[int], info: ValidationInfo) -> Optional[int]:
        if info.data.get("mode") == Mode.LORA and (value is None or value < 1):
            raise ValueError("в режиме LoRA нужен rank >= 1")
        return value

    @field_validator("hidden_widths")
    @classmethod
    def _positive_widths(cls, value: List[int]) -> List[int]:
        if any(w < 1 for w in value):
            raise ValueError("ширины скрытых слоёв должны быть >= 1")
        return value

    @property
    def method(self) -> str:
        return ("Fair" if self.fair else "") + self.mode.value

    @property
    def objective(self) -> FairObjectiveConfig:
        return FairObjectiveConfig(lam=self.lam, group_key=self.group_key)

    @property
    def coverage(self) -> bool:
        """Батчи с покрытием групп: по умолчанию включены только в fair-режимах"""
        return self.fair if self.group_coverage is None else self.group_coverage

    def echo(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


class SweepSpec(BaseModel):
    lambdas: List[float] = Field(default_factory=lambda: list(SWEEP_LAMBDAS), min_length=1)
    ranks: List[int] = Field(default_factory=lambda: [8], min_length=1)
    seeds: List[int] = Field(default_factory=lambda: list(SWEEP_SEEDS), min_length=1)
    methods: List[str] = Field(default_factory=lambda: list(METHODS), min_length=1)

    @field_validator("lambdas")
    @classmethod
    def _positive_lambdas(cls, value: List[float]) -> List[float]:
        if any(not np.isfinite(v) or v <= 0 for v in value):
            raise ValueError("сетка lambda должна состоять из конечных значений > 0")
        return value

    @field_validator("ranks")
    @classmethod
    def _positive_ranks(cls, value: List[int]) -> List[int]:
        if any(r < 1 for r in value):
            raise ValueError("сетка рангов должна состоять из значений >= 1")
        return value

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, value: List[str]) -> List[str]:
        unknown = [m for m in value if m not in METHODS]
        if unknown:
            raise ValueError(f"неизвестные методы {unknown}, допустимы {list(METHODS)}")
        return value


class EpochTrace(BaseModel):
    epoch: int
    train_loss: float
    train_penalty: float
    train_objective: float
    eval_accuracy: float
    eval_loss: float
    eval_group_loss_variance: Optional[float] = None


class RunArtifact(BaseModel):
    """Результат finetune: лучший чекпоинт, трасса по эпохам, итоговые метрики, эхо конфига"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: TrainConfig
    model: MlpClassifier
    best_epoch: int
    trace: List[EpochTrace]
    metrics: Optional[MetricsReport] = None
    directory: Optional[Path] = None

    @property
    def best_eval_accuracy(self) -> float:
        return self.trace[self.best_epoch].eval_accuracy


class SweepCell(BaseModel):
    """Одна точка сетки (метод, ранг, λ) для одного seed"""
    method: str
    rank: Optional[int] = None
    lam: float = 0.0
    seed: int
    status: Literal["ok", "failed"] = "ok"
    error: str = ""
    run_dir: str = ""
    metrics: dict = {}


class SweepAggregate(BaseModel):
    """Среднее ± выборочное стандартное отклонение по seed для одной точки сетки"""
    method: str
    rank: Optional[int] = None
    lam: float = 0.0
    seeds: int
    failed: int
    mean: dict
    std: dict
    selected: bool = False
