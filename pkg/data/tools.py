"""
Загрузка и сохранение CSV, стратифицированное разбиение train/eval
и батчи с покрытием групп.

Формат CSV: заголовок feature_0..feature_{d-1}, label, [group], [sensitive].
Без колонки group группа совпадает с меткой.
"""
import logging
import math
from pathlib import Path
from typing import List

import numpy as np
import pandas as pd

from core.exceptions import DataError, UsageError
from core.rng import SeededRng
from data.schemas import Dataset, GroupKey

ID_COLUMNS = ("label", "group", "sensitive")


def _feature_columns(columns: List[str], path: Path) -> List[str]:
    features = [c for c in columns if c not in ID_COLUMNS]
    expected = [f"feature_{i}" for i in range(len(features))]
    if features != expected:
        raise DataError(f"{path}: строка 1: ожидались колонки {', '.join(expected) or 'feature_0'}, получено {', '.join(features)}")
    if not features:
        raise DataError(f"{path}: строка 1: нет ни одной колонки признаков")
    return features


def _parse_column(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    raw = frame[column]
    missing = raw.isna() | (raw.str.strip() == "")
    if missing.any():
        line = int(missing.to_numpy().nonzero()[0][0]) + 2
        raise DataError(f"{path}: строка {line}: пустое значение в колонке {column} (строка короче заголовка?)")
    numeric = pd.to_numeric(raw, errors="coerce")
    if numeric.isna().any():
        line = int(numeric.isna().to_numpy().nonzero()[0][0]) + 2
        raise DataError(f"{path}: строка {line}: нечисловое значение {raw.iloc[line - 2]!r} в колонке {column}")
    # float() через numpy даёт корректное округление, важно для точного save→load
    return raw.str.strip().astype(np.float64).to_numpy()


def _parse_ids(frame: pd.DataFrame, column: str, path: Path) -> np.ndarray:
    values = _parse_column(frame, column, path)
    fractional = values != np.floor(values)
    if fractional.any():
        line = int(fractional.nonzero()[0][0]) + 2
        raise DataError(f"{path}: строка {line}: {column} должен быть целым, получено {values[line - 2]}")
    return values.astype(np.int64)


def load_csv(path: Path) -> Dataset:
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.ParserError as e:
        # pandas сообщает номер строки файла: "Expected 3 fields in line 5, saw 4"
        raise DataError(f"{path}: неровная строка: {e}")
    except (OSError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Не удалось прочитать {path}: {e}")

    columns = [str(c).strip() for c in frame.columns]
    frame.columns = columns
    if "label" not in columns:
        raise DataError(f"{path}: строка 1: нет обязательной колонки label")
    features = _feature_columns(columns, path)
    if frame.empty:
        raise DataError(f"{path}: нет ни одной записи")

    labels = _parse_ids(frame, "label", path)
    dataset = Dataset(
        features=np.column_stack([_parse_column(frame, c, path) for c in features]),
        labels=labels,
        groups=_parse_ids(frame, "group", path) if "group" in columns else labels.copy(),
        sensitive=_parse_ids(frame, "sensitive", path) if "sensitive" in columns else None,
    )
    logging.info(f"Loaded {len(dataset)} records with {dataset.feature_dim} features from {path}")
    return dataset


def save_csv(dataset: Dataset, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.features, columns=[f"feature_{i}" for i in range(dataset.feature_dim)])
    frame["label"] = dataset.labels
    frame["group"] = dataset.groups
    if dataset.sensitive is not None:
        frame["sensitive"] = dataset.sensitive
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logging.info(f"Saved {len(dataset)} records to {path}")
    return path


def split(dataset: Dataset, fraction: float, rng: SeededRng, stratify_by: GroupKey = GroupKey.LABEL) -> tuple[Dataset, Dataset]:
    """
    Разбиение по классам: в eval уходит floor(count·(1 − fraction)) примеров каждого класса,
    остаток в train. Обе части сохраняют исходный порядок записей.
    """
    if not 0 < fraction < 1:
        raise UsageError(f"split: fraction должна быть в (0, 1), получено {fraction}")
    ids = dataset.ids(stratify_by)
    train_idx, eval_idx = [], []
    for c in np.unique(ids):
        members = np.flatnonzero(ids == c)
        if members.size < 2:
            raise DataError(f"split: в классе {int(c)} меньше 2 примеров, стратификация невозможна")
        members = members[rng.permutation(members.size)]
        n_eval = math.floor(members.size * (1 - fraction) + 1e-9)
        eval_idx.append(members[:n_eval])
        train_idx.append(members[n_eval:])
    train = np.sort(np.concatenate(train_idx))
    held_out = np.sort(np.concatenate(eval_idx))
    return dataset.subset(train), dataset.subset(held_out)


def _even_sizes(n: int, count: int) -> List[int]:
    base, extra = divmod(n, count)
    return [base + (1 if i < extra else 0) for i in range(count)]


def stratified_batches(
    dataset: Dataset,
    batch_size: int,
    rng: SeededRng,
    key: GroupKey = GroupKey.LABEL,
    coverage: bool = True,
) -> List[np.ndarray]:
    """
    Одна эпоха мини-батчей (индексы записей). Эпоха всегда является перестановкой набора.

    В режиме coverage каждый батч, кроме, возможно, последнего, содержит хотя бы
    один пример каждой группы. Если самая малая группа не может дать по примеру
    каждому батчу, число батчей уменьшается до min_count + 1.
    """
    n = len(dataset)
    if batch_size < 1:
        raise UsageError(f"batch_size должен быть ≥ 1, получено {batch_size}")
    if not coverage:
        order = rng.permutation(n)
        return [order[i:i + batch_size] for i in range(0, n, batch_size)]

    ids = dataset.ids(key)
    groups = np.unique(ids)
    if batch_size < groups.size:
        raise DataError(f"stratified_batches: batch_size {batch_size} меньше числа групп {groups.size}")
    num_batches = math.ceil(n / batch_size)
    if num_batches == 1:
        return [rng.permutation(n)]

    members = [np.flatnonzero(ids == g) for g in groups]
    min_count = min(m.size for m in members)
    if min_count >= num_batches - 1:
        sizes = [batch_size] * (num_batches - 1) + [n - batch_size * (num_batches - 1)]
    else:
        num_batches = min_count + 1
        size = max(groups.size, n // num_batches)
        sizes = [size] * (num_batches - 1) + [n - size * (num_batches - 1)]
        logging.warning(
            f"Coverage batching: smallest group has {min_count} samples, "
            f"using {num_batches} batches of ~{size} instead of batch_size {batch_size}"
        )
    if sizes[-1] == 0:
        sizes.pop()

    seeded = len(sizes) - 1
    batches: List[List[int]] = [[] for _ in sizes]
    leftover = []
    for group_members in members:
        shuffled = group_members[rng.permutation(group_members.size)]
        for b in range(seeded):
            batches[b].append(int(shuffled[b]))
        leftover.extend(int(i) for i in shuffled[seeded:])
    leftover_arr = np.asarray(leftover, dtype=np.int64)
    leftover_arr = leftover_arr[rng.permutation(leftover_arr.size)]

    cursor = 0
    for b, size in enumerate(sizes):
        need = size - len(batches[b])
        batches[b].extend(int(i) for i in leftover_arr[cursor:cursor + need])
        cursor += need

    out = []
    for batch in batches:
        arr = np.asarray(batch, dtype=np.int64)
        out.append(arr[rng.permutation(arr.size)])
    return out
