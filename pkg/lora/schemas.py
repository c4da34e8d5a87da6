from pydantic import BaseModel, Field
from typing import List


class AdaptedMatrix(BaseModel):
    """Матрица весов d×k, к которой прикреплён LoRA-адаптер"""
    d: int = Field(gt=0)
    k: int = Field(gt=0)
    name: str = ""


class AuxiliaryTensor(BaseModel):
    """Полностью обучаемый тензор (например, веса и смещение головы)"""
    name: str
    size: int = Field(gt=0)


class ParamCountSpec(BaseModel):
    adapted: List[AdaptedMatrix] = []
    rank: int = Field(ge=1)
    auxiliary: List[AuxiliaryTensor] = []
