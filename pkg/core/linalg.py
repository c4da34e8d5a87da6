"""
Плотная линейная алгебра в float64 с фиксированным порядком суммирования.

Все публичные функции чистые и возвращают только конечные значения:
любой NaN/Inf в результате превращается в NumericalError.
"""
import numpy as np
from numpy.typing import NDArray

from core.exceptions import DataError, NotPsdError, NumericalError, ShapeError

Matrix = NDArray[np.float64]
Vector = NDArray[np.float64]

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-10


def as_matrix(values, name: str = "matrix") -> Matrix:
    """Приводит вход к двумерному массиву float64 (копия, C-порядок)"""
    matrix = np.array(values, dtype=np.float64, order="C", copy=True)
    if matrix.ndim != 2:
        raise ShapeError(f"{name}: ожидалась матрица, получена форма {matrix.shape}")
    return ensure_finite(matrix, name)


def ensure_finite(values: NDArray[np.float64], name: str) -> NDArray[np.float64]:
    if not np.isfinite(values).all():
        raise NumericalError(f"{name}: результат содержит NaN или Inf")
    return values


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """
    Произведение a·b. Накопление идёт слева направо по общей размерности,
    поэтому результат побитово совпадает с наивным тройным циклом.
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: несовместимые формы {a.shape} и {b.shape}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
    for p in range(a.shape[1]):
        out += np.multiply.outer(a[:, p], b[p, :])
    return ensure_finite(out, "matmul")


def symmetrize(m: Matrix) -> Matrix:
    return (m + m.T) / 2.0


def mean_and_covariance(rows: Matrix) -> tuple[Vector, Matrix]:
    """Средние по столбцам и выборочная ковариация с делителем n-1"""
    if rows.ndim != 2:
        raise ShapeError(f"mean_and_covariance: ожидалась матрица, получена форма {rows.shape}")
    n = rows.shape[0]
    if n < 2:
        raise DataError(f"mean_and_covariance: нужно минимум 2 строки, получено {n}")
    mean = np.add.reduce(rows, axis=0) / n
    centered = rows - mean
    covariance = symmetrize(matmul(centered.T, centered) / (n - 1))
    return ensure_finite(mean, "mean"), ensure_finite(covariance, "covariance")


def _check_symmetric(m: Matrix, name: str) -> float:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name}: ожидалась квадратная матрица, получена форма {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if float(np.abs(m - m.T).max(initial=0.0)) > SYMMETRY_TOL * scale:
        raise NotPsdError(f"{name}: матрица не симметрична")
    return scale


def smallest_eigenvalue(m: Matrix) -> float:
    _check_symmetric(m, "smallest_eigenvalue")
    return float(np.linalg.eigvalsh(symmetrize(m))[0])


def psd_sqrt(m: Matrix) -> Matrix:
    """
    Симметричный квадратный корень PSD-матрицы через eigh (LAPACK, симметричная задача).

    Допуски на симметрию и отрицательные собственные значения масштабируются
    на max(1, max|m|); отрицательные значения в пределах допуска обнуляются.
    """
    scale = _check_symmetric(m, "psd_sqrt")
    eigenvalues, eigenvectors = np.linalg.eigh(symmetrize(m))
    if eigenvalues.size and eigenvalues[0] < -PSD_TOL * scale:
        raise NotPsdError(f"psd_sqrt: собственное значение {eigenvalues[0]:.3e} меньше допуска")
    roots = np.sqrt(np.clip(eigenvalues, 0.0, None))
    root = matmul(eigenvectors * roots, eigenvectors.T)
    return ensure_finite(symmetrize(root), "psd_sqrt")
