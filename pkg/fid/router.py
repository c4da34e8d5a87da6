from pathlib import Path
from typing import Optional

import orjson
import typer

from core.rng import SeededRng
from fid.tools import fid_report, load_embeddings, subsample

router = typer.Typer()


@router.command("fid")
def fid_command(
    a: Path = typer.Option(..., "--a", help="CSV с эмбеддингами первого набора"),
    b: Path = typer.Option(..., "--b", help="CSV с эмбеддингами второго набора"),
    n: Optional[int] = typer.Option(None, "--n", min=2, help="Подвыборка n строк из каждого набора"),
    seed: int = typer.Option(0, "--seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="JSON с подробным результатом"),
):
    """
    Расстояние Фреше между двумя наборами эмбеддингов; печатает одно число.
    """
    set_a, set_b = load_embeddings(a), load_embeddings(b)
    if n is not None:
        rng = SeededRng(seed)
        set_a, set_b = subsample(set_a, n, rng.derive(0)), subsample(set_b, n, rng.derive(1))
    result = fid_report(set_a, set_b)
    if n is not None:
        result = result.model_copy(update={"subsample_n": n, "seed": seed})
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(orjson.dumps(result.model_dump(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    typer.echo(f"{result.distance:.10g}")
