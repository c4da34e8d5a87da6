"""
Небольшой MLP-классификатор с ручным прямым проходом.

Скрытые слои: аффинное преобразование + ReLU, голова без активации.
Любой скрытый вес может нести LoRA-адаптер; в режиме LoRA обучаются
только адаптеры и голова, в режиме FFT обучаются все тензоры.
"""
import logging
from typing import Dict, List, Optional

import numpy as np

from core.exceptions import ShapeError, UsageError
from core.linalg import Matrix, Vector, matmul
from core.rng import SeededRng
from lora.adapter import LoraAdapter, adapter_forward, effective_weight, merge, new_adapter
from lora.schemas import AdaptedMatrix, AuxiliaryTensor, ParamCountSpec
from model.schemas import Mode


class DenseLayer:
    def __init__(self, weight: Matrix, bias: Vector, adapter: Optional[LoraAdapter] = None):
        if weight.ndim != 2 or bias.shape != (weight.shape[1],):
            raise ShapeError(f"DenseLayer: вес {weight.shape} и смещение {bias.shape} не согласованы")
        if adapter is not None and adapter.base is not weight:
            raise UsageError("DenseLayer: адаптер должен быть построен над весом слоя")
        self.weight = weight
        self.bias = bias
        self.adapter = adapter

    @property
    def input_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def output_dim(self) -> int:
        return self.weight.shape[1]

    def effective(self) -> Matrix:
        return effective_weight(self.adapter) if self.adapter is not None else self.weight

    def apply(self, x: Matrix) -> Matrix:
        if self.adapter is not None:
            return adapter_forward(self.adapter, x) + self.bias
        return matmul(x, self.weight) + self.bias

    def copy(self) -> "DenseLayer":
        if self.adapter is not None:
            adapter = self.adapter.copy()
            return DenseLayer(adapter.base, self.bias.copy(), adapter)
        return DenseLayer(self.weight.copy(), self.bias.copy())


class MlpClassifier:
    def __init__(self, hidden: List[DenseLayer], head: DenseLayer, mode: Mode = Mode.FFT):
        dims = [layer.input_dim for layer in hidden] + [head.input_dim]
        outs = [layer.output_dim for layer in hidden]
        for i, out in enumerate(outs):
            if out != dims[i + 1]:
                raise ShapeError(f"MlpClassifier: слой {i} выдаёт {out}, следующий ждёт {dims[i + 1]}")
        if mode == Mode.FFT and any(layer.adapter is not None for layer in hidden):
            raise UsageError("MlpClassifier: в режиме FFT адаптеры не допускаются")
        self.hidden = hidden
        self.head = head
        self.mode = Mode(mode)
        if self.mode == Mode.LORA:
            # в режиме LoRA скрытые смещения и веса без адаптера заморожены
            for layer in hidden:
                layer.bias.flags.writeable = False
                layer.weight.flags.writeable = False

    @classmethod
    def create(cls, input_dim: int, hidden_widths: List[int], num_classes: int, rng: SeededRng) -> "MlpClassifier":
        """He-инициализация скрытых слоёв, нулевые смещения"""
        hidden = []
        width_in = input_dim
        for width in hidden_widths:
            weight = rng.normal((width_in, width), std=float(np.sqrt(2.0 / width_in)))
            hidden.append(DenseLayer(weight, np.zeros(width)))
            width_in = width
        return cls(hidden, new_head(width_in, num_classes, rng), Mode.FFT)

    @property
    def input_dim(self) -> int:
        return self.hidden[0].input_dim if self.hidden else self.head.input_dim

    @property
    def num_classes(self) -> int:
        return self.head.output_dim

    @property
    def hidden_widths(self) -> List[int]:
        return [layer.output_dim for layer in self.hidden]

    def copy(self) -> "MlpClassifier":
        return MlpClassifier([layer.copy() for layer in self.hidden], self.head.copy(), self.mode)

    def tensors(self) -> Dict[str, np.ndarray]:
        """Все тензоры модели (для чекпоинта), в фиксированном порядке"""
        out: Dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.hidden):
            out[f"layers.{i}.weight"] = layer.weight
            out[f"layers.{i}.bias"] = layer.bias
            if layer.adapter is not None:
                out[f"layers.{i}.lora_a"] = layer.adapter.a
                out[f"layers.{i}.lora_b"] = layer.adapter.b
        out["head.weight"] = self.head.weight
        out["head.bias"] = self.head.bias
        return out

    def trainable_tensors(self) -> Dict[str, np.ndarray]:
        """Обучаемые тензоры текущего режима; значения являются самими массивами модели, не копиями"""
        out: Dict[str, np.ndarray] = {}
        for i, layer in enumerate(self.hidden):
            if self.mode == Mode.FFT:
                out[f"layers.{i}.weight"] = layer.weight
                out[f"layers.{i}.bias"] = layer.bias
            elif layer.adapter is not None:
                out[f"layers.{i}.lora_a"] = layer.adapter.a
                out[f"layers.{i}.lora_b"] = layer.adapter.b
        out["head.weight"] = self.head.weight
        out["head.bias"] = self.head.bias
        return out

    def count_trainable_parameters(self) -> int:
        return sum(t.size for t in self.trainable_tensors().values())

    def param_count_spec(self) -> ParamCountSpec:
        if self.mode == Mode.FFT:
            auxiliary = [AuxiliaryTensor(name=name, size=t.size) for name, t in self.trainable_tensors().items()]
            return ParamCountSpec(adapted=[], rank=1, auxiliary=auxiliary)
        adapted = [
            AdaptedMatrix(d=layer.input_dim, k=layer.output_dim, name=f"layers.{i}.weight")
            for i, layer in enumerate(self.hidden)
            if layer.adapter is not None
        ]
        ranks = {layer.adapter.rank for layer in self.hidden if layer.adapter is not None}
        if len(ranks) > 1:
            raise UsageError(f"param_count_spec: адаптеры разного ранга {sorted(ranks)}")
        auxiliary = [
            AuxiliaryTensor(name="head.weight", size=self.head.weight.size),
            AuxiliaryTensor(name="head.bias", size=self.head.bias.size),
        ]
        return ParamCountSpec(adapted=adapted, rank=ranks.pop() if ranks else 1, auxiliary=auxiliary)

    def with_adapters(
        self,
        rank: int,
        rng: SeededRng,
        init_std: float = 0.01,
        scale: float = 1.0,
        layers: Optional[List[int]] = None,
    ) -> "MlpClassifier":
        """Копия модели в режиме LoRA: адаптеры на выбранных скрытых весах (по умолчанию на всех)"""
        source = self.merged()
        chosen = range(len(source.hidden)) if layers is None else layers
        for i in chosen:
            if not 0 <= i < len(source.hidden):
                raise UsageError(f"with_adapters: скрытого слоя {i} нет, всего {len(source.hidden)}")
        hidden = []
        for i, layer in enumerate(source.hidden):
            if i in chosen:
                adapter = new_adapter(layer.weight, rank, rng.derive(i), init_std, scale)
                hidden.append(DenseLayer(adapter.base, layer.bias, adapter))
            else:
                hidden.append(layer)
        logging.info(f"Attached rank-{rank} adapters to hidden layers {list(chosen)}")
        return MlpClassifier(hidden, source.head, Mode.LORA)

    def merged(self) -> "MlpClassifier":
        """Копия в режиме FFT с адаптерами, вмёрженными в веса"""
        hidden = [
            DenseLayer(merge(layer.adapter) if layer.adapter is not None else layer.weight.copy(), layer.bias.copy())
            for layer in self.hidden
        ]
        return MlpClassifier(hidden, self.head.copy(), Mode.FFT)

    def with_head(self, num_classes: int, rng: SeededRng) -> "MlpClassifier":
        model = self.copy()
        model.head = new_head(model.head.input_dim, num_classes, rng)
        return model


def new_head(input_dim: int, num_classes: int, rng: SeededRng) -> DenseLayer:
    weight = rng.normal((input_dim, num_classes), std=float(np.sqrt(1.0 / input_dim)))
    return DenseLayer(weight, np.zeros(num_classes))


def relu(z: Matrix) -> Matrix:
    return np.maximum(z, 0.0)


def _check_width(model: MlpClassifier, features: Matrix) -> None:
    if features.ndim != 2 or features.shape[1] != model.input_dim:
        raise ShapeError(f"forward: ширина признаков {features.shape} не совпадает с входом модели {model.input_dim}")


def forward(model: MlpClassifier, features: Matrix) -> Matrix:
    _check_width(model, features)
    h = features
    for layer in model.hidden:
        h = relu(layer.apply(h))
    return model.head.apply(h)


def penultimate_features(model: MlpClassifier, features: Matrix) -> Matrix:
    """Активации на входе головы"""
    if not model.hidden:
        raise UsageError("penultimate_features: у модели нет скрытых слоёв")
    _check_width(model, features)
    h = features
    for layer in model.hidden:
        h = relu(layer.apply(h))
    return h


def predict(model: MlpClassifier, features: Matrix) -> np.ndarray:
    return np.argmax(forward(model, features), axis=1)
