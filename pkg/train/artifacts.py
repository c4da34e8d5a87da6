"""
Каталог запуска:

    config.yaml       эхо TrainConfig
    checkpoint.npz    тензоры лучшей модели
    checkpoint.json   топология
    trace.csv         по строке на эпоху, начиная с epoch 0
    metrics.csv       одна строка: идентификатор запуска и MetricsReport
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ValidationError

from core.exceptions import DataError
from metrics.convert import SCALAR_FIELDS
from model.checkpoint import save_checkpoint
from train.convert import TRACE_COLUMNS, architecture_name, artifact_to_row, trace_to_rows
from train.schemas import RunArtifact, TrainConfig

CONFIG_FILE = "config.yaml"
TRACE_FILE = "trace.csv"
METRICS_FILE = "metrics.csv"
FLOAT_FORMAT = "%.17g"


def write_csv(rows: List[Dict[str, Any]], path: Path, columns: Optional[List[str]] = None) -> Path:
    """CSV с фиксированным форматом чисел: одинаковые значения дают одинаковые байты"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(rows, columns=columns)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_config(config: TrainConfig, directory: Path) -> Path:
    path = Path(directory) / CONFIG_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(config.echo(), sort_keys=False, allow_unicode=True), encoding="utf-8")
    return path


def write_run(artifact: RunArtifact, directory: Path) -> Path:
    directory = Path(directory)
    write_config(artifact.config, directory)
    save_checkpoint(artifact.model, directory)
    write_csv(trace_to_rows(artifact.trace), directory / TRACE_FILE, TRACE_COLUMNS)
    if artifact.metrics is not None:
        write_csv([artifact_to_row(artifact)], directory / METRICS_FILE)
    logging.info(f"Run artifacts written to {directory}")
    return directory


class RunRecord(BaseModel):
    """Запуск, прочитанный с диска: эхо конфига и скалярные метрики"""
    directory: str
    config: TrainConfig
    metrics: Dict[str, Optional[float]]

    @property
    def architecture(self) -> str:
        return architecture_name(self.config)


def read_run(directory: Path, root: Optional[Path] = None) -> RunRecord:
    directory = Path(directory)
    try:
        echo = yaml.safe_load((directory / CONFIG_FILE).read_text(encoding="utf-8"))
        frame = pd.read_csv(directory / METRICS_FILE)
    except (OSError, yaml.YAMLError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Не удалось прочитать запуск {directory}: {e}")
    if len(frame) != 1:
        raise DataError(f"{directory / METRICS_FILE}: ожидалась одна строка, получено {len(frame)}")
    try:
        config = TrainConfig.model_validate(echo)
    except ValidationError as e:
        raise DataError(f"{directory / CONFIG_FILE}: некорректное эхо конфига: {e.errors()[0]['msg']}")
    row = frame.iloc[0]
    metrics = {
        name: (None if pd.isna(row[name]) else float(row[name]))
        for name in SCALAR_FIELDS
        if name in frame.columns
    }
    name = directory.relative_to(root).as_posix() if root is not None else directory.as_posix()
    return RunRecord(directory=name, config=config, metrics=metrics)


def find_runs(root: Path) -> List[RunRecord]:
    """Все каталоги запусков под root в порядке относительных путей"""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"Каталог запусков {root} не найден")
    directories = sorted(
        (p.parent for p in root.rglob(CONFIG_FILE) if (p.parent / METRICS_FILE).is_file()),
        key=lambda p: p.relative_to(root).as_posix(),
    )
    if not directories:
        raise DataError(f"В {root} нет ни одного каталога запуска с {CONFIG_FILE} и {METRICS_FILE}")
    return [read_run(d, root) for d in directories]


def read_trace(directory: Path) -> np.ndarray:
    """eval_accuracy по эпохам из trace.csv"""
    try:
        frame = pd.read_csv(Path(directory) / TRACE_FILE)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Не удалось прочитать трассу {directory}: {e}")
    return frame["eval_accuracy"].to_numpy(dtype=np.float64)
