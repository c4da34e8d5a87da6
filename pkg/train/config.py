"""
Run config: YAML-документ с плоским отображением, один ключ на поле TrainConfig,
плюс необязательные sweep_lambdas / sweep_ranks / sweep_seeds / sweep_methods
и блок synthetic (SyntheticSpec). Пример:

    mode: LoRA
    fair: true
    lambda: 1.0
    rank: 4
    epochs: 20
    group_key: label
    sweep_lambdas: [0.1, 1, 10]

Ошибки разбора и валидации сообщаются с номером строки ключа.
"""
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import yaml
from pydantic import BaseModel, ValidationError

from core.exceptions import ConfigError, DataError
from data.schemas import SyntheticSpec
from train.schemas import SweepSpec, TrainConfig

SWEEP_KEYS = {
    "sweep_lambdas": "lambdas",
    "sweep_ranks": "ranks",
    "sweep_seeds": "seeds",
    "sweep_methods": "methods",
}
SYNTHETIC_KEY = "synthetic"


class RunConfig(BaseModel):
    train: TrainConfig
    sweep: SweepSpec
    synthetic: Optional[SyntheticSpec] = None


def read_document(path: Path) -> tuple[Dict[str, Any], Dict[str, int]]:
    """Сырое отображение и номера строк его ключей (с 1)"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Не удалось прочитать конфиг {path}: {e}")
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        raise ConfigError(f"{path}: {e.problem or e.context}", mark.line + 1 if mark else None)
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: верхний уровень конфига должен быть отображением ключ: значение", 1)
    lines = {str(key.value): key.start_mark.line + 1 for key, _ in node.value}
    return data, lines


def _validate(model: type[BaseModel], raw: Dict[str, Any], line_of: Callable[[str], Optional[int]]) -> BaseModel:
    try:
        return model.model_validate(raw)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else ""
        raise ConfigError(f"{key}: {error['msg']}" if key else error["msg"], line_of(key))


def load_run_config(path: Path, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Читает конфиг и применяет переопределения CLI (seed, lambda, rank, mode, fair)
    до валидации. Для переопределённых ключей номер строки не указывается.
    """
    data, lines = read_document(path)
    applied = {k: v for k, v in (overrides or {}).items() if v is not None}
    data.update(applied)

    def line_of(key: str) -> Optional[int]:
        return None if key in applied else lines.get(key)

    train_raw = {k: v for k, v in data.items() if k not in SWEEP_KEYS and k != SYNTHETIC_KEY}
    sweep_raw = {SWEEP_KEYS[k]: v for k, v in data.items() if k in SWEEP_KEYS}
    train = _validate(TrainConfig, train_raw, line_of)
    sweep = _validate(SweepSpec, sweep_raw, lambda key: line_of(f"sweep_{key}"))

    synthetic = None
    if SYNTHETIC_KEY in data:
        if not isinstance(data[SYNTHETIC_KEY], dict):
            raise ConfigError("synthetic: ожидается отображение", line_of(SYNTHETIC_KEY))
        try:
            synthetic = _validate(SyntheticSpec, data[SYNTHETIC_KEY], lambda key: line_of(SYNTHETIC_KEY))
        except DataError as e:
            raise ConfigError(f"synthetic: {e.detail}", line_of(SYNTHETIC_KEY))
    return RunConfig(train=train, sweep=sweep, synthetic=synthetic)


def parse_list(text: Optional[str], cast: Callable[[str], Any], flag: str) -> Optional[List[Any]]:
    """Список через запятую из флага CLI, например --lambdas 0.1,1,10"""
    if text is None:
        return None
    try:
        values = [cast(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"{flag}: ожидается список через запятую, получено {text!r}")
    if not values:
        raise ConfigError(f"{flag}: пустой список")
    return values


def parse_bool(text: Optional[str], flag: str) -> Optional[bool]:
    if text is None:
        return None
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{flag}: ожидается true или false, получено {text!r}")
