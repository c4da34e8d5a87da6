from enum import Enum
from typing import Dict

import numpy as np
from pydantic import BaseModel, ConfigDict


class Mode(str, Enum):
    FFT = "FFT"
    LORA = "LoRA"


class BatchGradients(BaseModel):
    """Градиенты по каждому обучаемому тензору и значение скалярной функции потерь"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    grads: Dict[str, np.ndarray]
    loss: float

    def keys(self) -> list[str]:
        return list(self.grads)
