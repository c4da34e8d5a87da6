"""
Сетка метод × ранг × λ × seed. Ячейки выполняются последовательно в порядке сетки;
упавшая ячейка записывается со status=failed и не прерывает перебор.
"""
import logging
import math
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from pydantic import ValidationError
from tqdm import tqdm

from core.exceptions import FairLoraError, NumericalError
from data.schemas import Dataset
from metrics.convert import HIGHER_IS_BETTER, SCALAR_FIELDS
from model.classifier import MlpClassifier
from model.schemas import Mode
from train.artifacts import METRICS_FILE, write_csv, write_run
from train.convert import aggregate_to_row, artifact_to_row, cell_to_row
from train.engine import finetune
from train.schemas import SweepAggregate, SweepCell, SweepSpec, TrainConfig

SWEEP_FILE = "sweep.csv"

CellKey = Tuple[str, Optional[int], float]


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Среднее и выборочное (n−1) стандартное отклонение; для одного значения std = 0"""
    n = len(values)
    try:
        mean = sum(values) / n
        spread = 0.0 if n < 2 else math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))
    except OverflowError:
        spread = math.inf
    if not (math.isfinite(mean) and math.isfinite(spread)):
        raise NumericalError(f"mean_std: значения {list(values)} дают неконечный результат")
    return mean, spread


def grid(spec: SweepSpec) -> Iterator[CellKey]:
    for method in spec.methods:
        ranks: List[Optional[int]] = list(spec.ranks) if method.endswith("LoRA") else [None]
        lambdas = list(spec.lambdas) if method.startswith("Fair") else [0.0]
        for rank in ranks:
            for lam in lambdas:
                yield method, rank, lam


def cell_config(base_config: TrainConfig, method: str, rank: Optional[int], lam: float, seed: int) -> TrainConfig:
    echo = base_config.echo()
    echo.update(
        mode=(Mode.LORA if method.endswith("LoRA") else Mode.FFT).value,
        fair=method.startswith("Fair"),
        rank=rank,
        seed=seed,
    )
    echo["lambda"] = lam
    return TrainConfig.model_validate(echo)


def cell_directory(method: str, rank: Optional[int], lam: float, seed: int) -> str:
    rank_part = f"_r{rank}" if rank is not None else ""
    return f"{method}{rank_part}_l{lam:g}_s{seed}"


def sweep(
    spec: SweepSpec,
    base_config: TrainConfig,
    base: MlpClassifier,
    dataset: Dataset,
    out_dir: Path,
    eval_dataset: Optional[Dataset] = None,
) -> List[SweepCell]:
    out_dir = Path(out_dir)
    cells: List[SweepCell] = []
    runs = [(key, seed) for key in grid(spec) for seed in spec.seeds]
    logging.info(f"Sweep: {len(runs)} runs ({len(runs) // len(spec.seeds)} cells x {len(spec.seeds)} seeds) into {out_dir}")

    for (method, rank, lam), seed in tqdm(runs, desc="sweep", unit="run"):
        name = cell_directory(method, rank, lam, seed)
        try:
            config = cell_config(base_config, method, rank, lam, seed)
            artifact = finetune(config, base, dataset, eval_dataset)
            write_run(artifact, out_dir / name)
            row = artifact_to_row(artifact)
            cells.append(SweepCell(
                method=method, rank=rank, lam=lam, seed=seed, run_dir=name,
                metrics={k: row.get(k) for k in SCALAR_FIELDS},
            ))
        except (FairLoraError, ValidationError) as e:
            detail = e.detail if isinstance(e, FairLoraError) else e.errors()[0]["msg"]
            logging.error(f"Sweep cell {name} failed: {detail}")
            cells.append(SweepCell(method=method, rank=rank, lam=lam, seed=seed, status="failed", error=detail, run_dir=name))

    write_csv([cell_to_row(c) for c in cells], out_dir / METRICS_FILE)
    return cells


def aggregate(cells: List[SweepCell]) -> List[SweepAggregate]:
    """Агрегаты по точкам сетки в порядке первого появления; метрика без значений опускается"""
    order: List[CellKey] = []
    by_key: Dict[CellKey, List[SweepCell]] = {}
    for cell in cells:
        key = (cell.method, cell.rank, cell.lam)
        if key not in by_key:
            order.append(key)
            by_key[key] = []
        by_key[key].append(cell)

    out = []
    for key in order:
        group = by_key[key]
        ok = [c for c in group if c.status == "ok"]
        mean, std = {}, {}
        for name in SCALAR_FIELDS:
            values = [c.metrics[name] for c in ok if c.metrics.get(name) is not None]
            if values:
                mean[name], std[name] = mean_std(values)
        out.append(SweepAggregate(
            method=key[0], rank=key[1], lam=key[2],
            seeds=len(ok), failed=len(group) - len(ok), mean=mean, std=std,
        ))
    return select_lambdas(out)


def select_lambdas(aggregates: List[SweepAggregate]) -> List[SweepAggregate]:
    """Для каждой пары (метод, ранг) отмечает λ с лучшей средней eval accuracy; при равенстве меньшую λ"""
    best: Dict[Tuple[str, Optional[int]], SweepAggregate] = {}
    for agg in aggregates:
        if "accuracy" not in agg.mean:
            continue
        key = (agg.method, agg.rank)
        current = best.get(key)
        better = current is None or agg.mean["accuracy"] > current.mean["accuracy"] or (
            agg.mean["accuracy"] == current.mean["accuracy"] and agg.lam < current.lam
        )
        if better:
            best[key] = agg
    chosen = {id(a) for a in best.values()}
    return [a.model_copy(update={"selected": id(a) in chosen}) for a in aggregates]


def best_per_metric(aggregates: List[SweepAggregate]) -> Dict[int, List[str]]:
    """Позиции агрегатов, лучших по каждой метрике (с учётом направления); равные делят отметку"""
    flags: Dict[int, List[str]] = {i: [] for i in range(len(aggregates))}
    for name in SCALAR_FIELDS:
        values = {i: a.mean[name] for i, a in enumerate(aggregates) if name in a.mean}
        if not values:
            continue
        target = max(values.values()) if HIGHER_IS_BETTER[name] else min(values.values())
        for i, v in values.items():
            if v == target:
                flags[i].append(name)
    return flags


def write_sweep(aggregates: List[SweepAggregate], out_dir: Path) -> Path:
    flags = best_per_metric(aggregates)
    rows = [aggregate_to_row(a, flags[i]) for i, a in enumerate(aggregates)]
    path = write_csv(rows, Path(out_dir) / SWEEP_FILE)
    logging.info(f"Sweep summary written to {path}")
    return path
