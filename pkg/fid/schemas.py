import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from core.exceptions import DataError


class EmbeddingSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    embeddings: np.ndarray
    source: str = ""

    @model_validator(mode="after")
    def _check(self) -> "EmbeddingSet":
        if self.embeddings.ndim != 2 or self.embeddings.shape[0] < 2:
            raise DataError(f"EmbeddingSet {self.source!r}: нужно минимум 2 вектора, форма {self.embeddings.shape}")
        if not np.isfinite(self.embeddings).all():
            raise DataError(f"EmbeddingSet {self.source!r}: есть NaN или Inf")
        return self

    @property
    def size(self) -> int:
        return int(self.embeddings.shape[0])

    @property
    def dim(self) -> int:
        return int(self.embeddings.shape[1])


class FidResult(BaseModel):
    distance: float
    mean_term: float
    trace_term: float
    regularized: bool
    epsilon: float
    n_a: int
    n_b: int
    dim: int
    subsample_n: int | None = None
    seed: int | None = None
