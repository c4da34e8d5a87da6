from pathlib import Path
from typing import Optional

import typer

from core.exceptions import ConfigError
from data.synth import synth_generate
from data.tools import save_csv
from train.config import load_run_config

router = typer.Typer()


@router.command("synth")
def synth(
    config: Path = typer.Option(..., "--config", help="Run config с блоком synthetic"),
    out: Path = typer.Option(..., "--out", help="Куда записать CSV"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Переопределяет synthetic.seed"),
):
    """
    Генерирует синтетический набор с дисбалансом групп и сохраняет его в CSV.
    """
    run_config = load_run_config(config)
    if run_config.synthetic is None:
        raise ConfigError(f"{config}: нет блока synthetic")
    spec = run_config.synthetic if seed is None else run_config.synthetic.model_copy(update={"seed": seed})
    save_csv(synth_generate(spec), out)
    typer.echo(str(out))
