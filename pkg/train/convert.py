from typing import Any, Dict, List

from metrics.convert import SCALAR_FIELDS, report_to_row
from model.schemas import Mode
from train.schemas import EpochTrace, RunArtifact, SweepAggregate, SweepCell, TrainConfig

TRACE_COLUMNS = list(EpochTrace.model_fields)


def architecture_name(config: TrainConfig) -> str:
    """Имя конфигурации модели для строк таблицы, например mlp-64x64"""
    return "mlp-" + "x".join(str(w) for w in config.hidden_widths)


def run_identity(config: TrainConfig) -> Dict[str, Any]:
    return {
        "architecture": architecture_name(config),
        "method": config.method,
        "rank": config.rank if config.mode == Mode.LORA else -1,
        "lambda": config.lam,
        "seed": config.seed,
    }


def trace_to_rows(trace: List[EpochTrace]) -> List[Dict[str, Any]]:
    return [entry.model_dump() for entry in trace]


def artifact_to_row(artifact: RunArtifact) -> Dict[str, Any]:
    row = run_identity(artifact.config)
    row["best_epoch"] = artifact.best_epoch
    row["trainable_parameters"] = artifact.model.count_trainable_parameters()
    row.update(report_to_row(artifact.metrics))
    return row


def cell_to_row(cell: SweepCell) -> Dict[str, Any]:
    row = {
        "method": cell.method,
        "rank": -1 if cell.rank is None else cell.rank,
        "lambda": cell.lam,
        "seed": cell.seed,
        "status": cell.status,
        "error": cell.error,
        "run_dir": cell.run_dir,
    }
    row.update({name: cell.metrics.get(name) for name in SCALAR_FIELDS})
    return row


def aggregate_to_row(aggregate: SweepAggregate, best: List[str]) -> Dict[str, Any]:
    row = {
        "method": aggregate.method,
        "rank": -1 if aggregate.rank is None else aggregate.rank,
        "lambda": aggregate.lam,
        "seeds": aggregate.seeds,
        "failed": aggregate.failed,
        "selected": aggregate.selected,
        "best": " ".join(best),
    }
    for name in SCALAR_FIELDS:
        row[f"{name}_mean"] = aggregate.mean.get(name)
        row[f"{name}_std"] = aggregate.std.get(name)
    return row
