from lora.schemas import AdaptedMatrix, AuxiliaryTensor, ParamCountSpec


def count_trainable(spec: ParamCountSpec) -> int:
    """Σ r·(d+k) по адаптированным матрицам плюс размеры полностью обучаемых тензоров"""
    adapted = sum(spec.rank * (m.d + m.k) for m in spec.adapted)
    auxiliary = sum(t.size for t in spec.auxiliary)
    return adapted + auxiliary


def trainable_ratio(trainable: int, total: int) -> float:
    """Процент обучаемых параметров, округлённый до двух знаков"""
    return round(100.0 * trainable / total, 2)


def vit_base_spec(rank: int, num_classes: int, layers: int = 12, width: int = 768) -> ParamCountSpec:
    """
    Описание параметров в духе ViT-B/DiNO: два адаптированных проектора width×width
    в каждом блоке, смещения заморожены, голова обучается полностью.
    """
    adapted = [
        AdaptedMatrix(d=width, k=width, name=f"blocks.{layer}.{proj}")
        for layer in range(layers)
        for proj in ("query", "value")
    ]
    auxiliary = [
        AuxiliaryTensor(name="head.weight", size=width * num_classes),
        AuxiliaryTensor(name="head.bias", size=num_classes),
    ]
    return ParamCountSpec(adapted=adapted, rank=rank, auxiliary=auxiliary)
