from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from core.exceptions import DataError


class Grouping(str, Enum):
    BY_CLASS = "by-class"
    BY_SENSITIVE = "by-sensitive"


class EvalBundle(BaseModel):
    """Предсказания Ŷ, метки Y, id групп и опционально чувствительные id S"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    predictions: np.ndarray
    labels: np.ndarray
    groups: Optional[np.ndarray] = None
    sensitive: Optional[np.ndarray] = None
    num_classes: Optional[int] = None

    @model_validator(mode="after")
    def _check(self) -> "EvalBundle":
        n = self.labels.shape[0]
        for name, ids in (("predictions", self.predictions), ("labels", self.labels), ("groups", self.groups), ("sensitive", self.sensitive)):
            if ids is None:
                continue
            if ids.shape != (n,):
                raise DataError(f"EvalBundle: {name} имеет форму {ids.shape}, ожидалось ({n},)")
            if n and ids.min() < 0:
                raise DataError(f"EvalBundle: отрицательный id в {name}")
        return self

    def __len__(self) -> int:
        return int(self.labels.shape[0])


class MetricsReport(BaseModel):
    accuracy: float
    f1: Dict[int, float]
    recall: Dict[int, float]
    f1_min: float
    recall_min: float
    delta_f1: float
    eod_pairwise: Dict[str, float] = {}
    eod_one_vs_all: Dict[str, float] = {}
    eod_max: Optional[float] = None
    sensitive_accuracy: Optional[float] = None
    loss_variance_across_groups: Optional[float] = None
    loss_variance_divisor: str = "population"
    undefined_f1_groups: List[int] = []
    undefined_eod_skipped: int = 0
    num_samples: int = 0
