from typing import Dict, List

from pydantic import BaseModel


class ReportColumn(BaseModel):
    metric: str
    label: str
    higher_is_better: bool
    scale: float = 1.0

    @property
    def arrow(self) -> str:
        return "↑" if self.higher_is_better else "↓"

    @property
    def header(self) -> str:
        return f"{self.label} {self.arrow}"


class ReportCell(BaseModel):
    mean: float
    std: float
    n: int


class ReportRow(BaseModel):
    """Строка таблицы: конфигурация модели, метод, ранг (−1 для полного fine-tuning) и выбранная λ"""
    architecture: str
    method: str
    rank: int
    lam: float
    seeds: int
    cells: Dict[str, ReportCell]
    runs: List[str]


class ReportTable(BaseModel):
    columns: List[ReportColumn]
    rows: List[ReportRow]


class NormalizedRow(BaseModel):
    architecture: str
    method: str
    rank: int
    scores: Dict[str, float]


class NormalizedComparison(BaseModel):
    """Оценки в [0, 1], больше лучше; degenerate: пары architecture:metric с одинаковыми значениями"""
    metrics: List[str]
    rows: List[NormalizedRow]
    degenerate: List[str] = []
