from typing import Dict, Optional

from metrics.schemas import MetricsReport

# Скалярные поля отчёта в порядке колонок metrics.csv
SCALAR_FIELDS = [
    "accuracy",
    "f1_min",
    "recall_min",
    "delta_f1",
    "eod_max",
    "sensitive_accuracy",
    "group_loss_variance",
]

# Направление "лучше" для каждой скалярной метрики: True, если больше значит лучше
HIGHER_IS_BETTER = {
    "accuracy": True,
    "f1_min": True,
    "recall_min": True,
    "delta_f1": False,
    "eod_max": False,
    "sensitive_accuracy": False,
    "group_loss_variance": False,
}


def report_to_row(report: MetricsReport) -> Dict[str, Optional[float] | str | int]:
    """Плоская запись со стабильными именами полей для CSV"""
    row: Dict[str, Optional[float] | str | int] = {
        "accuracy": report.accuracy,
        "f1_min": report.f1_min,
        "recall_min": report.recall_min,
        "delta_f1": report.delta_f1,
        "eod_max": report.eod_max,
        "sensitive_accuracy": report.sensitive_accuracy,
        "group_loss_variance": report.loss_variance_across_groups,
        "loss_variance_divisor": report.loss_variance_divisor,
        "num_samples": report.num_samples,
        "undefined_f1_groups": " ".join(str(g) for g in report.undefined_f1_groups),
        "undefined_eod_skipped": report.undefined_eod_skipped,
    }
    row.update({f"f1.{c}": v for c, v in report.f1.items()})
    row.update({f"recall.{c}": v for c, v in report.recall.items()})
    row.update({f"eod_ova.{k}": v for k, v in report.eod_one_vs_all.items()})
    row.update({f"eod_pair.{k}": v for k, v in report.eod_pairwise.items()})
    return row
