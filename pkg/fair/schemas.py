import math
from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field, field_validator

from data.schemas import GroupKey


class FairObjectiveConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lam: float = Field(default=0.0, ge=0, alias="lambda")
    group_key: GroupKey = GroupKey.LABEL

    @field_validator("lam")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("lambda должна быть конечной")
        return value


class GroupLossReport(BaseModel):
    """J = L + λ·Σ_g (L_g − mean)² по группам, присутствующим в батче"""
    groups: List[int]
    per_group_loss: Dict[int, float]
    overall_loss: float
    penalty: float
    lam: float
    objective: float
