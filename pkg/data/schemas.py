from enum import Enum
from typing import Iterator, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.exceptions import DataError


class GroupKey(str, Enum):
    LABEL = "label"
    GROUP = "group"
    SENSITIVE = "sensitive"


class DatasetRecord(BaseModel):
    features: List[float]
    label: int = Field(ge=0)
    group: int = Field(ge=0)
    sensitive: Optional[int] = Field(default=None, ge=0)


class Dataset(BaseModel):
    """Неизменяемый набор данных: признаки n×d, метки, группы, опционально чувствительные id"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    sensitive: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _check(self) -> "Dataset":
        n = self.labels.shape[0]
        if self.features.ndim != 2 or self.features.shape[0] != n or self.groups.shape != (n,):
            raise DataError(f"Dataset: признаки {self.features.shape}, метки {self.labels.shape}, группы {self.groups.shape} не согласованы")
        if self.sensitive is not None and self.sensitive.shape != (n,):
            raise DataError(f"Dataset: чувствительные id {self.sensitive.shape} не согласованы с {n} записями")
        for name, ids in (("label", self.labels), ("group", self.groups), ("sensitive", self.sensitive)):
            if ids is not None and ids.size and ids.min() < 0:
                raise DataError(f"Dataset: отрицательный id в колонке {name}")
        for array in (self.features, self.labels, self.groups, self.sensitive):
            if array is not None:
                array.flags.writeable = False
        return self

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self) else 0

    def ids(self, key: GroupKey) -> np.ndarray:
        if key == GroupKey.LABEL:
            return self.labels
        if key == GroupKey.GROUP:
            return self.groups
        if self.sensitive is None:
            raise DataError("В наборе данных нет колонки sensitive")
        return self.sensitive

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[indices],
            labels=self.labels[indices],
            groups=self.groups[indices],
            sensitive=None if self.sensitive is None else self.sensitive[indices],
        )

    def records(self) -> Iterator[DatasetRecord]:
        for i in range(len(self)):
            yield DatasetRecord(
                features=self.features[i].tolist(),
                label=int(self.labels[i]),
                group=int(self.groups[i]),
                sensitive=None if self.sensitive is None else int(self.sensitive[i]),
            )

    @classmethod
    def from_records(cls, records: List[DatasetRecord]) -> "Dataset":
        if not records:
            raise DataError("Dataset: пустой список записей")
        widths = {len(r.features) for r in records}
        if len(widths) != 1:
            raise DataError(f"Dataset: разная ширина признаков {sorted(widths)}")
        has_sensitive = [r.sensitive is not None for r in records]
        if any(has_sensitive) and not all(has_sensitive):
            raise DataError("Dataset: колонка sensitive заполнена не у всех записей")
        return cls(
            features=np.array([r.features for r in records], dtype=np.float64),
            labels=np.array([r.label for r in records], dtype=np.int64),
            groups=np.array([r.group for r in records], dtype=np.int64),
            sensitive=np.array([r.sensitive for r in records], dtype=np.int64) if all(has_sensitive) else None,
        )


class SyntheticSpec(BaseModel):
    """
    Синтетическая задача с дисбалансом групп: гауссовы кластеры по ячейкам (класс, чувствительная группа).

    counts[c][s]: число примеров в ячейке. Средние зависят только от класса
    (или задаются явно через means[c][s]); чувствительная группа влияет на
    признаки только через spurious_dims с силой spurious_strength.
    """
    num_classes: int = Field(ge=1)
    num_sensitive: int = Field(default=1, ge=1)
    counts: List[List[int]]
    feature_dim: int = Field(default=8, ge=1)
    class_separation: float = Field(default=3.0, ge=0)
    noise_scale: float = Field(default=1.0, gt=0)
    means: Optional[List[List[List[float]]]] = None
    spurious_strength: float = Field(default=0.0, ge=0, le=1)
    spurious_dims: List[int] = [0]
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "SyntheticSpec":
        if len(self.counts) != self.num_classes or any(len(row) != self.num_sensitive for row in self.counts):
            raise DataError(f"SyntheticSpec: counts должен иметь форму {self.num_classes}×{self.num_sensitive}")
        if any(c < 0 for row in self.counts for c in row):
            raise DataError("SyntheticSpec: отрицательное число примеров")
        if any(sum(row) == 0 for row in self.counts):
            raise DataError("SyntheticSpec: каждый класс должен быть непустым")
        if any(not 0 <= d < self.feature_dim for d in self.spurious_dims):
            raise DataError(f"SyntheticSpec: spurious_dims вне [0, {self.feature_dim})")
        if self.means is not None:
            shape_ok = len(self.means) == self.num_classes and all(
                len(row) == self.num_sensitive and all(len(mu) == self.feature_dim for mu in row) for row in self.means
            )
            if not shape_ok:
                raise DataError(f"SyntheticSpec: means должен иметь форму {self.num_classes}×{self.num_sensitive}×{self.feature_dim}")
        return self
