from pathlib import Path
from typing import Optional

import typer

from report.tools import make_table, write_report
from train.artifacts import find_runs

router = typer.Typer()


@router.command("report")
def report(
    runs: Path = typer.Option(..., "--runs", help="Каталог с каталогами запусков"),
    out: Optional[Path] = typer.Option(None, "--out", help="Куда писать таблицы (по умолчанию --runs)"),
):
    """
    Собирает table.md, table.csv, normalized.csv и rank_curves.csv по всем запускам под --runs.
    """
    table = make_table(find_runs(runs))
    for path in write_report(table, out or runs):
        typer.echo(str(path))
