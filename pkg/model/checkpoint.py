"""
Формат чекпоинта: каталог с checkpoint.npz (тензоры) и checkpoint.json (топология).

Ключи тензоров: layers.<i>.weight|bias|lora_a|lora_b, head.weight|bias.
Базовые веса хранятся один раз; адаптер описывается (d, k, r, scale, A, B).
"""
import logging
from pathlib import Path

import numpy as np
import orjson

from core.exceptions import DataError
from lora.adapter import LoraAdapter
from model.classifier import DenseLayer, MlpClassifier
from model.schemas import Mode

FORMAT_VERSION = 1
TENSORS_FILE = "checkpoint.npz"
META_FILE = "checkpoint.json"


def checkpoint_meta(model: MlpClassifier) -> dict:
    adapters = {
        str(i): {"d": layer.input_dim, "k": layer.output_dim, "rank": layer.adapter.rank, "scale": layer.adapter.scale}
        for i, layer in enumerate(model.hidden)
        if layer.adapter is not None
    }
    return {
        "format_version": FORMAT_VERSION,
        "mode": model.mode.value,
        "input_dim": model.input_dim,
        "hidden_widths": model.hidden_widths,
        "num_classes": model.num_classes,
        "adapters": adapters,
    }


def save_checkpoint(model: MlpClassifier, directory: Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.savez(directory / TENSORS_FILE, **model.tensors())
    (directory / META_FILE).write_bytes(orjson.dumps(checkpoint_meta(model), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    logging.info(f"Checkpoint saved: {directory}")
    return directory


def load_checkpoint(directory: Path) -> MlpClassifier:
    directory = Path(directory)
    try:
        meta = orjson.loads((directory / META_FILE).read_bytes())
        with np.load(directory / TENSORS_FILE) as archive:
            tensors = {name: archive[name].astype(np.float64) for name in archive.files}
    except (OSError, orjson.JSONDecodeError, ValueError) as e:
        raise DataError(f"Не удалось прочитать чекпоинт {directory}: {e}")
    if meta.get("format_version") != FORMAT_VERSION:
        raise DataError(f"Неподдерживаемая версия чекпоинта: {meta.get('format_version')}")

    try:
        hidden = []
        for i in range(len(meta["hidden_widths"])):
            weight = tensors[f"layers.{i}.weight"]
            bias = tensors[f"layers.{i}.bias"]
            spec = meta["adapters"].get(str(i))
            adapter = None
            if spec is not None:
                adapter = LoraAdapter(weight, tensors[f"layers.{i}.lora_a"], tensors[f"layers.{i}.lora_b"], spec["scale"])
            hidden.append(DenseLayer(weight, bias, adapter))
        head = DenseLayer(tensors["head.weight"], tensors["head.bias"])
    except KeyError as e:
        raise DataError(f"В чекпоинте {directory} нет тензора {e}")
    model = MlpClassifier(hidden, head, Mode(meta["mode"]))
    logging.info(f"Checkpoint loaded: {directory} ({model.mode.value}, widths {model.hidden_widths})")
    return model
