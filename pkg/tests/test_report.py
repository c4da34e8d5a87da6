import pytest

from core.exceptions import DataError
from model.schemas import Mode
from report.schemas import ReportCell, ReportColumn, ReportRow, ReportTable
from report.tools import format_cell, make_table, normalize_for_comparison, render_markdown, write_report
from train.artifacts import RunRecord
from train.schemas import TrainConfig

ACCURACY = ReportColumn(metric="accuracy", label="Accuracy", higher_is_better=True, scale=100.0)
VARIANCE = ReportColumn(metric="group_loss_variance", label="Group-Loss Variance", higher_is_better=False)


def _config(method: str, lam: float = 0.0, seed: int = 0, widths=(8, 8)) -> TrainConfig:
    return TrainConfig(
        mode=Mode.LORA if method.endswith("LoRA") else Mode.FFT,
        fair=method.startswith("Fair"),
        lam=lam,
        rank=4 if method.endswith("LoRA") else None,
        seed=seed,
        hidden_widths=list(widths),
    )


def _record(method: str, seed: int, accuracy: float, variance: float, lam: float = 0.0, widths=(8, 8)) -> RunRecord:
    config = _config(method, lam, seed, widths)
    return RunRecord(
        directory=f"{method}_l{lam:g}_s{seed}",
        config=config,
        metrics={"accuracy": accuracy, "group_loss_variance": variance, "eod_max": None},
    )


def _records():
    return [
        _record("LoRA", 0, 0.90, 0.30),
        _record("LoRA", 1, 0.92, 0.20),
        _record("FairLoRA", 0, 0.91, 0.10, lam=0.1),
        _record("FairLoRA", 1, 0.91, 0.12, lam=0.1),
        _record("FairLoRA", 0, 0.95, 0.05, lam=1.0),
        _record("FairLoRA", 1, 0.93, 0.07, lam=1.0),
        _record("FFT", 0, 0.89, 0.25),
    ]


def _row(method: str, **means) -> ReportRow:
    return ReportRow(
        architecture="mlp-8x8",
        method=method,
        rank=-1,
        lam=0.0,
        seeds=1,
        cells={name: ReportCell(mean=value, std=0.0, n=1) for name, value in means.items()},
        runs=[],
    )


def test_format_single_seed_has_zero_std():
    assert format_cell(ReportCell(mean=0.9123, std=0.0, n=1), ACCURACY) == "91.23 ± 0.00"


def test_format_three_seeds():
    table = make_table([_record("FFT", s, acc, 0.1) for s, acc in enumerate([0.9735, 0.9758, 0.9749])])
    (row,) = table.rows
    assert format_cell(row.cells["accuracy"], table.columns[0]) == "97.47 ± 0.12"


def test_make_table_selects_best_lambda_and_orders_rows():
    table = make_table(_records())
    assert [c.metric for c in table.columns] == ["accuracy", "group_loss_variance"]
    assert [(r.method, r.rank, r.lam) for r in table.rows] == [("LoRA", 4, 0.0), ("FairLoRA", 4, 1.0), ("FFT", -1, 0.0)]
    fair = table.rows[1]
    assert fair.cells["accuracy"].mean == pytest.approx(0.94)
    assert fair.seeds == 2
    assert sorted(fair.runs) == ["FairLoRA_l1_s0", "FairLoRA_l1_s1"]


def test_make_table_rejects_inconsistent_metrics():
    records = _records()
    records[0].metrics["eod_max"] = 0.1
    with pytest.raises(DataError):
        make_table(records)


def test_markdown_arrows_and_best():
    text = render_markdown(make_table(_records()))
    header = text.splitlines()[0]
    assert "Accuracy ↑" in header
    assert "Group-Loss Variance ↓" in header
    assert "**94.00 ± 1.41**" in text
    assert "| mlp-8x8 | FFT | full | 0 |" in text


def test_normalization_hand_values():
    table = ReportTable(
        columns=[ACCURACY, VARIANCE],
        rows=[_row(m, accuracy=a, group_loss_variance=a) for m, a in zip(["LoRA", "FairLoRA", "FFT", "FairFFT"], [10.0, 20.0, 15.0, 5.0])],
    )
    comparison = normalize_for_comparison(table)
    assert [r.scores["accuracy"] for r in comparison.rows] == pytest.approx([1 / 3, 1.0, 2 / 3, 0.0])
    assert [r.scores["group_loss_variance"] for r in comparison.rows] == pytest.approx([2 / 3, 0.0, 1 / 3, 1.0])
    assert comparison.degenerate == []


def test_normalization_is_affine_invariant():
    values = [0.3, 0.7, 0.55]
    plain = ReportTable(columns=[ACCURACY], rows=[_row(m, accuracy=v) for m, v in zip(["LoRA", "FairLoRA", "FFT"], values)])
    shifted = ReportTable(columns=[ACCURACY], rows=[_row(m, accuracy=4.0 * v + 2.5) for m, v in zip(["LoRA", "FairLoRA", "FFT"], values)])
    a = [r.scores["accuracy"] for r in normalize_for_comparison(plain).rows]
    b = [r.scores["accuracy"] for r in normalize_for_comparison(shifted).rows]
    assert b == pytest.approx(a, abs=1e-12)


def test_normalization_two_methods_and_constant_column():
    table = ReportTable(
        columns=[ACCURACY, VARIANCE],
        rows=[_row("LoRA", accuracy=0.8, group_loss_variance=0.2), _row("FairLoRA", accuracy=0.9, group_loss_variance=0.2)],
    )
    comparison = normalize_for_comparison(table)
    assert [r.scores["accuracy"] for r in comparison.rows] == [0.0, 1.0]
    assert [r.scores["group_loss_variance"] for r in comparison.rows] == [1.0, 1.0]
    assert comparison.degenerate == ["mlp-8x8:group_loss_variance"]


def test_normalization_needs_two_rows():
    with pytest.raises(DataError):
        normalize_for_comparison(ReportTable(columns=[ACCURACY], rows=[_row("LoRA", accuracy=0.5)]))


def test_write_report_is_idempotent(tmp_path):
    table = make_table(_records())
    first = write_report(table, tmp_path / "a")
    second = write_report(make_table(_records()), tmp_path / "b")
    assert [p.name for p in first] == ["table.md", "table.csv", "rank_curves.csv", "normalized.csv"]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()
    again = write_report(table, tmp_path / "a")
    assert [p.read_bytes() for p in again] == [p.read_bytes() for p in second]


def test_single_row_architecture_skips_normalized(tmp_path):
    records = _records() + [_record("FFT", 0, 0.8, 0.3, widths=(16,))]
    written = write_report(make_table(records), tmp_path)
    assert "normalized.csv" not in [p.name for p in written]
    assert "mlp-16" in (tmp_path / "table.md").read_text(encoding="utf-8")
