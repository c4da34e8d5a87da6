"""
Таблицы отчёта по каталогам запусков.

Для каждой тройки (модель, метод, ранг) берётся λ с лучшей средней eval accuracy,
в ячейке среднее ± выборочное std по seed. Метрики-доли выводятся в процентах
с двумя знаками, дисперсия групповых потерь как есть.
"""
import logging
from pathlib import Path
from typing import Dict, List, Tuple

from core.exceptions import DataError
from metrics.convert import HIGHER_IS_BETTER, SCALAR_FIELDS
from report.schemas import NormalizedComparison, NormalizedRow, ReportCell, ReportColumn, ReportRow, ReportTable
from train.artifacts import RunRecord, write_csv
from train.schemas import METHODS, SweepCell
from train.sweep import aggregate

LABELS = {
    "accuracy": "Accuracy",
    "f1_min": "F1 Min",
    "recall_min": "Recall Min",
    "delta_f1": "ΔF1",
    "eod_max": "EOD_max",
    "sensitive_accuracy": "Sensitive Acc",
    "group_loss_variance": "Group-Loss Variance",
}
PERCENT = {"accuracy", "f1_min", "recall_min", "delta_f1", "eod_max", "sensitive_accuracy"}


def _available(record: RunRecord) -> Tuple[str, ...]:
    return tuple(name for name in SCALAR_FIELDS if record.metrics.get(name) is not None)


def _row_order(row: ReportRow) -> tuple:
    return row.architecture, METHODS.index(row.method), row.rank


def make_table(records: List[RunRecord]) -> ReportTable:
    if not records:
        raise DataError("make_table: нет ни одного запуска")
    available = _available(records[0])
    for record in records[1:]:
        if _available(record) != available:
            raise DataError(
                f"make_table: разные наборы метрик: {records[0].directory} {list(available)} "
                f"и {record.directory} {list(_available(record))}"
            )
    columns = [
        ReportColumn(metric=name, label=LABELS[name], higher_is_better=HIGHER_IS_BETTER[name], scale=100.0 if name in PERCENT else 1.0)
        for name in available
    ]

    by_architecture: Dict[str, List[RunRecord]] = {}
    for record in records:
        by_architecture.setdefault(record.architecture, []).append(record)

    rows = []
    for architecture, group in by_architecture.items():
        cells = [
            SweepCell(
                method=r.config.method,
                rank=r.config.rank if r.config.method.endswith("LoRA") else None,
                lam=r.config.lam,
                seed=r.config.seed,
                run_dir=r.directory,
                metrics=r.metrics,
            )
            for r in group
        ]
        for agg in aggregate(cells):
            if not agg.selected:
                continue
            members = [c for c in cells if (c.method, c.rank, c.lam) == (agg.method, agg.rank, agg.lam)]
            rows.append(ReportRow(
                architecture=architecture,
                method=agg.method,
                rank=-1 if agg.rank is None else agg.rank,
                lam=agg.lam,
                seeds=agg.seeds,
                cells={
                    name: ReportCell(mean=agg.mean[name], std=agg.std[name], n=agg.seeds)
                    for name in available
                },
                runs=[c.run_dir for c in members],
            ))
    rows.sort(key=_row_order)
    logging.info(f"Report table: {len(rows)} rows from {len(records)} runs")
    return ReportTable(columns=columns, rows=rows)


def format_cell(cell: ReportCell, column: ReportColumn) -> str:
    return f"{cell.mean * column.scale:.2f} ± {cell.std * column.scale:.2f}"


def _best_means(table: ReportTable) -> Dict[str, float]:
    best = {}
    for column in table.columns:
        means = [row.cells[column.metric].mean for row in table.rows]
        best[column.metric] = max(means) if column.higher_is_better else min(means)
    return best


def render_markdown(table: ReportTable) -> str:
    header = ["Model", "Method", "Rank", "λ"] + [c.header for c in table.columns]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] * len(header)) + "|"]
    best = _best_means(table)
    for row in table.rows:
        values = [row.architecture, row.method, "full" if row.rank < 0 else str(row.rank), f"{row.lam:g}"]
        for column in table.columns:
            text = format_cell(row.cells[column.metric], column)
            values.append(f"**{text}**" if row.cells[column.metric].mean == best[column.metric] else text)
        lines.append("| " + " | ".join(values) + " |")
    return "\n".join(lines) + "\n"


def table_rows(table: ReportTable) -> List[dict]:
    """Плоские строки table.csv: значения в тех же единицах, что и в markdown, без округления"""
    out = []
    for row in table.rows:
        flat = {
            "architecture": row.architecture,
            "method": row.method,
            "rank": row.rank,
            "lambda": row.lam,
            "seeds": row.seeds,
        }
        for column in table.columns:
            cell = row.cells[column.metric]
            flat[f"{column.metric}_mean"] = cell.mean * column.scale
            flat[f"{column.metric}_std"] = cell.std * column.scale
            flat[column.header] = format_cell(cell, column)
        flat["runs"] = " ".join(row.runs)
        out.append(flat)
    return out


def normalize_for_comparison(table: ReportTable) -> NormalizedComparison:
    """
    Для каждой модели и метрики: метрики «меньше лучше» переворачиваются (v → max − v),
    затем min-max масштабирование в [0, 1]. Колонка из равных значений получает 1.0
    и попадает в degenerate.
    """
    by_architecture: Dict[str, List[ReportRow]] = {}
    for row in table.rows:
        by_architecture.setdefault(row.architecture, []).append(row)

    rows: List[NormalizedRow] = []
    degenerate: List[str] = []
    for architecture, group in by_architecture.items():
        if len(group) < 2:
            raise DataError(f"normalize_for_comparison: для {architecture} нужно минимум 2 метода, есть {len(group)}")
        scores: List[Dict[str, float]] = [{} for _ in group]
        for column in table.columns:
            raw = [row.cells[column.metric].mean for row in group]
            top = max(raw)
            values = raw if column.higher_is_better else [top - v for v in raw]
            low, high = min(values), max(values)
            if high == low:
                degenerate.append(f"{architecture}:{column.metric}")
                for s in scores:
                    s[column.metric] = 1.0
                continue
            for s, v in zip(scores, values):
                s[column.metric] = (v - low) / (high - low)
        rows.extend(
            NormalizedRow(architecture=architecture, method=row.method, rank=row.rank, scores=s)
            for row, s in zip(group, scores)
        )
    if degenerate:
        logging.warning(f"Normalized comparison: constant columns set to 1.0: {', '.join(degenerate)}")
    return NormalizedComparison(metrics=[c.metric for c in table.columns], rows=rows, degenerate=degenerate)


def normalized_rows(comparison: NormalizedComparison) -> List[dict]:
    flagged = set(comparison.degenerate)
    out = []
    for row in comparison.rows:
        for metric in comparison.metrics:
            out.append({
                "architecture": row.architecture,
                "method": row.method,
                "rank": row.rank,
                "metric": metric,
                "score": row.scores[metric],
                "degenerate": f"{row.architecture}:{metric}" in flagged,
            })
    return out


def rank_curves(table: ReportTable) -> List[dict]:
    """Длинный формат для графиков метрика-от-ранга; полный fine-tuning имеет rank = −1"""
    return [
        {
            "architecture": row.architecture,
            "method": row.method,
            "rank": row.rank,
            "lambda": row.lam,
            "metric": column.metric,
            "mean": row.cells[column.metric].mean * column.scale,
            "std": row.cells[column.metric].std * column.scale,
        }
        for row in table.rows
        for column in table.columns
    ]


def write_report(table: ReportTable, out_dir: Path) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "table.md"]
    written[0].write_text(render_markdown(table), encoding="utf-8")
    written.append(write_csv(table_rows(table), out_dir / "table.csv"))
    written.append(write_csv(rank_curves(table), out_dir / "rank_curves.csv"))
    if all(sum(1 for r in table.rows if r.architecture == row.architecture) >= 2 for row in table.rows):
        written.append(write_csv(normalized_rows(normalize_for_comparison(table)), out_dir / "normalized.csv"))
    else:
        logging.warning("Normalized comparison skipped: some model configuration has fewer than two methods")
    logging.info(f"Report written: {', '.join(p.name for p in written)}")
    return written
