"""
LoRA-репараметризация замороженного веса: θ = θ₀ + s·A·B.

A (d×r) инициализируется гауссовым шумом, B (r×k) нулями, поэтому
в момент создания эффективный вес в точности равен θ₀.
"""
import numpy as np

from core.exceptions import ShapeError, UsageError
from core.linalg import Matrix, as_matrix, ensure_finite, matmul
from core.rng import SeededRng


class LoraAdapter:
    def __init__(self, base: Matrix, a: Matrix, b: Matrix, scale: float = 1.0):
        d, k = base.shape
        if a.ndim != 2 or b.ndim != 2 or a.shape[0] != d or b.shape[1] != k or a.shape[1] != b.shape[0]:
            raise ShapeError(f"LoraAdapter: формы base {base.shape}, A {a.shape}, B {b.shape} не согласованы")
        rank = a.shape[1]
        if not 1 <= rank <= min(d, k):
            raise UsageError(f"LoraAdapter: ранг {rank} вне диапазона [1, {min(d, k)}]")
        self.base = base
        # θ₀ заморожен: любая попытка записи в base падает
        self.base.flags.writeable = False
        self.a = a
        self.b = b
        self.scale = float(scale)

    @property
    def rank(self) -> int:
        return self.a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.base.shape

    def copy(self) -> "LoraAdapter":
        return LoraAdapter(self.base, self.a.copy(), self.b.copy(), self.scale)

    def __repr__(self) -> str:
        d, k = self.shape
        return f"LoraAdapter(d={d}, k={k}, rank={self.rank}, scale={self.scale})"


def new_adapter(base: Matrix, rank: int, rng: SeededRng, init_std: float = 0.01, scale: float = 1.0) -> LoraAdapter:
    d, k = base.shape
    if not 1 <= rank <= min(d, k):
        raise UsageError(f"new_adapter: ранг {rank} вне диапазона [1, {min(d, k)}]")
    if init_std <= 0:
        raise UsageError(f"new_adapter: init_std должен быть > 0, получено {init_std}")
    frozen = as_matrix(base, "base")
    a = rng.normal((d, rank), std=init_std)
    b = np.zeros((rank, k), dtype=np.float64)
    return LoraAdapter(frozen, a, b, scale)


def delta(ad: LoraAdapter) -> Matrix:
    return ad.scale * matmul(ad.a, ad.b)


def effective_weight(ad: LoraAdapter) -> Matrix:
    return ensure_finite(ad.base + delta(ad), "effective_weight")


def merge(ad: LoraAdapter) -> Matrix:
    """Обычный вес для экспорта: число параметров как у исходной модели"""
    return effective_weight(ad).copy()


def adapter_forward(ad: LoraAdapter, x: Matrix) -> Matrix:
    """x·θ₀ + s·(x·A)·B без материализации θ"""
    return matmul(x, ad.base) + ad.scale * matmul(matmul(x, ad.a), ad.b)


def route_gradient(ad: LoraAdapter, d_theta: Matrix) -> tuple[Matrix, Matrix]:
    """∂L/∂A = s·∂L/∂θ·Bᵀ, ∂L/∂B = s·Aᵀ·∂L/∂θ; θ₀ градиента не получает"""
    if d_theta.shape != ad.base.shape:
        raise ShapeError(f"route_gradient: форма градиента {d_theta.shape} не совпадает с base {ad.base.shape}")
    d_a = ad.scale * matmul(d_theta, ad.b.T)
    d_b = ad.scale * matmul(ad.a.T, d_theta)
    return d_a, d_b
