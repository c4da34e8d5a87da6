"""
Расстояние Фреше между двумя наборами эмбеддингов в гауссовом приближении:

    ‖μ_a − μ_b‖² + tr(Σ_a + Σ_b − 2·sqrtm(Σ_a^{1/2} Σ_b Σ_a^{1/2}))

Корень из несимметричного Σ_aΣ_b заменён симметричным суррогатом с тем же следом.
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from configs import FID_EPSILON
from core.exceptions import DataError, NumericalError, ShapeError
from core.linalg import matmul, mean_and_covariance, psd_sqrt, smallest_eigenvalue, symmetrize
from core.rng import SeededRng
from fid.schemas import EmbeddingSet, FidResult

MIN_EIGENVALUE = 1e-10
TRACE_RESIDUE_TOL = 1e-8


def fid_report(a: EmbeddingSet, b: EmbeddingSet, epsilon: float = FID_EPSILON) -> FidResult:
    if a.dim != b.dim:
        raise ShapeError(f"fid: ширина эмбеддингов {a.dim} ({a.source}) и {b.dim} ({b.source}) различается")
    mu_a, sigma_a = mean_and_covariance(a.embeddings)
    mu_b, sigma_b = mean_and_covariance(b.embeddings)

    # вырожденные ковариации (малые n) регуляризуются одинаково с обеих сторон
    regularized = min(smallest_eigenvalue(sigma_a), smallest_eigenvalue(sigma_b)) < MIN_EIGENVALUE
    if regularized:
        logging.warning(f"FID: covariance is rank-deficient, adding {epsilon:g}*I to both sides")
        sigma_a = sigma_a + epsilon * np.eye(a.dim)
        sigma_b = sigma_b + epsilon * np.eye(b.dim)

    diff = mu_a - mu_b
    mean_term = float(diff @ diff)
    root_a = psd_sqrt(sigma_a)
    cross = psd_sqrt(symmetrize(matmul(matmul(root_a, sigma_b), root_a)))
    trace_term = float(np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * np.trace(cross))

    scale = max(1.0, float(np.trace(sigma_a) + np.trace(sigma_b)))
    if trace_term < 0:
        if trace_term < -TRACE_RESIDUE_TOL * scale:
            raise NumericalError(f"fid: отрицательный след {trace_term:.3e} за пределами допуска")
        trace_term = 0.0

    return FidResult(
        distance=max(0.0, mean_term + trace_term),
        mean_term=mean_term,
        trace_term=trace_term,
        regularized=regularized,
        epsilon=epsilon if regularized else 0.0,
        n_a=a.size,
        n_b=b.size,
        dim=a.dim,
    )


def fid(a: EmbeddingSet, b: EmbeddingSet) -> float:
    return fid_report(a, b).distance


def subsample(embedding_set: EmbeddingSet, n: int, rng: SeededRng) -> EmbeddingSet:
    """Равномерная выборка n строк без возвращения"""
    if n > embedding_set.size:
        raise DataError(f"subsample: запрошено {n} строк из {embedding_set.size}")
    rows = rng.choice(embedding_set.size, n)
    return EmbeddingSet(embeddings=embedding_set.embeddings[rows], source=embedding_set.source)


def load_embeddings(path: Path) -> EmbeddingSet:
    """CSV с d числовыми колонками, строка на эмбеддинг; заголовок необязателен"""
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"Не удалось прочитать эмбеддинги {path}: {e}")
    first = pd.to_numeric(frame.iloc[0], errors="coerce")
    if first.isna().all():
        frame = frame.iloc[1:]
    numeric = frame.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1)
    if bad.any():
        line = int(bad.to_numpy().nonzero()[0][0]) + (2 if first.isna().all() else 1)
        raise DataError(f"{path}: строка {line}: нечисловое значение в эмбеддинге")
    return EmbeddingSet(embeddings=numeric.to_numpy(dtype=np.float64), source=str(path))
