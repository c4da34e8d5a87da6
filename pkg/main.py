import logging
import sys
from typing import List, Optional

import click
import typer
from rich.console import Console
from rich.logging import RichHandler

from configs import LOG_LEVEL
from core.exceptions import FairLoraError
from data.router import router as data_router
from fid.router import router as fid_router
from report.router import router as report_router
from train.router import router as train_router

logging.basicConfig(level=LOG_LEVEL, format="%(message)s", datefmt="[%X]", handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=False)])

app = typer.Typer(name="fairlora", help="FairLoRA: обучение с штрафом на дисперсию групповых потерь, метрики справедливости и FID", no_args_is_help=True)


def include_router(target: typer.Typer, router: typer.Typer) -> None:
    """Подключает команды router верхним уровнем, как include_router в веб-приложении"""
    target.registered_commands.extend(router.registered_commands)


include_router(app, data_router)
include_router(app, train_router)
include_router(app, fid_router)
include_router(app, report_router)


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """Выполняет подкоманду и возвращает код выхода: 0 успех, 1 ошибка использования, 2 данные, 3 численная ошибка"""
    command = typer.main.get_command(app)
    try:
        command.main(args=list(sys.argv[1:] if argv is None else argv), prog_name="fairlora", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show()
        return 1
    except click.Abort:
        return 1
    except FairLoraError as e:
        logging.error(f"{type(e).__name__}: {e.detail}")
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(cli_dispatch())
