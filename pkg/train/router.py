from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError

from core.exceptions import ConfigError
from data.schemas import GroupKey
from data.tools import load_csv
from metrics.convert import report_to_row
from model.checkpoint import load_checkpoint, save_checkpoint
from report.tools import make_table, write_report
from train.artifacts import METRICS_FILE, TRACE_FILE, find_runs, write_config, write_csv, write_run
from train.config import load_run_config, parse_bool, parse_list
from train.convert import TRACE_COLUMNS, trace_to_rows
from train.engine import evaluate, finetune, pretrain
from train.sweep import aggregate, sweep, write_sweep

router = typer.Typer()


def _overrides(seed, lam, rank, mode, fair) -> dict:
    return {"seed": seed, "lambda": lam, "rank": rank, "mode": mode, "fair": parse_bool(fair, "--fair")}


@router.command("pretrain")
def pretrain_command(
    config: Path = typer.Option(..., "--config"),
    data: Path = typer.Option(..., "--data", help="CSV задачи предобучения"),
    out: Path = typer.Option(..., "--out"),
    eval_data: Optional[Path] = typer.Option(None, "--eval-data"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """
    Обучает базовую модель (FFT, без штрафа) и сохраняет лучший чекпоинт.
    """
    run_config = load_run_config(config, {"seed": seed})
    artifact = pretrain(run_config.train, load_csv(data), load_csv(eval_data) if eval_data else None)
    write_config(artifact.config, out)
    save_checkpoint(artifact.model, out)
    write_csv(trace_to_rows(artifact.trace), out / TRACE_FILE, TRACE_COLUMNS)
    typer.echo(str(out))


@router.command("finetune")
def finetune_command(
    config: Path = typer.Option(..., "--config"),
    base: Path = typer.Option(..., "--base", help="Каталог чекпоинта θ₀"),
    data: Path = typer.Option(..., "--data"),
    out: Path = typer.Option(..., "--out"),
    eval_data: Optional[Path] = typer.Option(None, "--eval-data"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    lam: Optional[float] = typer.Option(None, "--lambda"),
    rank: Optional[int] = typer.Option(None, "--rank"),
    mode: Optional[str] = typer.Option(None, "--mode", help="FFT или LoRA"),
    fair: Optional[str] = typer.Option(None, "--fair", help="true или false"),
):
    """
    Один запуск fine-tuning; пишет каталог запуска с config.yaml, чекпоинтом, trace.csv и metrics.csv.
    """
    run_config = load_run_config(config, _overrides(seed, lam, rank, mode, fair))
    artifact = finetune(run_config.train, load_checkpoint(base), load_csv(data), load_csv(eval_data) if eval_data else None)
    write_run(artifact, out)
    typer.echo(str(out))


@router.command("sweep")
def sweep_command(
    config: Path = typer.Option(..., "--config"),
    base: Path = typer.Option(..., "--base"),
    data: Path = typer.Option(..., "--data"),
    out: Path = typer.Option(..., "--out"),
    eval_data: Optional[Path] = typer.Option(None, "--eval-data"),
    lambdas: Optional[str] = typer.Option(None, "--lambdas", help="Например 0.1,1,10"),
    ranks: Optional[str] = typer.Option(None, "--ranks"),
    seeds: Optional[str] = typer.Option(None, "--seeds"),
):
    """
    Перебор метод × ранг × λ × seed; пишет каталоги запусков, metrics.csv, sweep.csv и таблицы отчёта.
    """
    run_config = load_run_config(config)
    updates = {
        "lambdas": parse_list(lambdas, float, "--lambdas"),
        "ranks": parse_list(ranks, int, "--ranks"),
        "seeds": parse_list(seeds, int, "--seeds"),
    }
    try:
        spec = run_config.sweep.model_validate({**run_config.sweep.model_dump(), **{k: v for k, v in updates.items() if v is not None}})
    except ValidationError as e:
        error = e.errors()[0]
        raise ConfigError(f"--{error['loc'][0]}: {error['msg']}")
    cells = sweep(spec, run_config.train, load_checkpoint(base), load_csv(data), out, load_csv(eval_data) if eval_data else None)
    write_sweep(aggregate(cells), out)
    if any(c.status == "ok" for c in cells):
        write_report(make_table(find_runs(out)), out)
    typer.echo(str(out))


@router.command("eval")
def eval_command(
    checkpoint: Path = typer.Option(..., "--checkpoint"),
    data: Path = typer.Option(..., "--data"),
    group_key: GroupKey = typer.Option(GroupKey.LABEL, "--group-key"),
    seed: int = typer.Option(0, "--seed", help="Seed пробы чувствительного признака"),
    out: Optional[Path] = typer.Option(None, "--out", help="Каталог для metrics.csv"),
):
    """
    Метрики чекпоинта на наборе данных; без --out печатает их.
    """
    report = evaluate(load_checkpoint(checkpoint), load_csv(data), group_key, seed=seed)
    row = report_to_row(report)
    if out is not None:
        write_csv([row], out / METRICS_FILE)
        typer.echo(str(out / METRICS_FILE))
        return
    for key, value in row.items():
        typer.echo(f"{key}: {value}")


@router.command("export")
def export_command(
    checkpoint: Path = typer.Option(..., "--checkpoint"),
    out: Path = typer.Option(..., "--out"),
):
    """
    Вмёрживает адаптеры в веса и сохраняет обычный чекпоинт.
    """
    save_checkpoint(load_checkpoint(checkpoint).merged(), out)
    typer.echo(str(out))
