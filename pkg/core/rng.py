import numpy as np


class SeededRng:
    """
    Детерминированный генератор: numpy PCG64, инициализированный через SeedSequence.

    Одинаковый seed даёт одинаковый поток на любой платформе.
    derive() порождает независимые потоки для разных задач одного запуска
    (инициализация, батчи, проба), чтобы они не сдвигали друг друга.
    """
    algorithm = "PCG64"

    def __init__(self, seed: int, *keys: int):
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in keys)
        self._generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, *self.keys])))

    def derive(self, *keys: int) -> "SeededRng":
        return SeededRng(self.seed, *self.keys, *keys)

    @property
    def state(self) -> dict:
        return self._generator.bit_generator.state

    def normal(self, shape, std: float = 1.0, mean: float = 0.0) -> np.ndarray:
        return self._generator.normal(loc=mean, scale=std, size=shape)

    def uniform(self, shape) -> np.ndarray:
        return self._generator.random(size=shape)

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def choice(self, n: int, size: int) -> np.ndarray:
        """Выборка без возвращения size индексов из range(n)"""
        return self._generator.choice(n, size=size, replace=False)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self._generator.integers(low, high, size=size)

    def __repr__(self) -> str:
        return f"SeededRng(seed={self.seed}, keys={self.keys}, algorithm={self.algorithm})"
