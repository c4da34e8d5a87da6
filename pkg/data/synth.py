import logging

import numpy as np

from core.rng import SeededRng
from data.schemas import Dataset, SyntheticSpec


def cell_means(spec: SyntheticSpec, rng: SeededRng) -> np.ndarray:
    """Средние C×S×d; без явных means среднее зависит только от класса и равно 0 на spurious_dims"""
    if spec.means is not None:
        return np.asarray(spec.means, dtype=np.float64)
    per_class = rng.normal((spec.num_classes, spec.feature_dim), std=spec.class_separation)
    per_class[:, spec.spurious_dims] = 0.0
    return np.repeat(per_class[:, None, :], spec.num_sensitive, axis=1)


def synth_generate(spec: SyntheticSpec) -> Dataset:
    rng = SeededRng(spec.seed)
    means = cell_means(spec, rng.derive(0))
    noise_rng = rng.derive(1)

    features, labels, sensitive = [], [], []
    for c in range(spec.num_classes):
        for s in range(spec.num_sensitive):
            count = spec.counts[c][s]
            if count == 0:
                continue
            x = means[c, s] + noise_rng.normal((count, spec.feature_dim), std=spec.noise_scale)
            # центрированный код группы, чтобы при S = 1 сдвиг был нулевым
            x[:, spec.spurious_dims] += spec.spurious_strength * (s - (spec.num_sensitive - 1) / 2)
            features.append(x)
            labels.append(np.full(count, c, dtype=np.int64))
            sensitive.append(np.full(count, s, dtype=np.int64))

    label_arr = np.concatenate(labels)
    dataset = Dataset(
        features=np.concatenate(features, axis=0),
        labels=label_arr,
        groups=label_arr.copy(),
        sensitive=np.concatenate(sensitive) if spec.num_sensitive > 1 else None,
    )
    logging.info(
        f"Generated synthetic dataset: {len(dataset)} records, {spec.num_classes} classes, "
        f"{spec.num_sensitive} sensitive groups, spurious strength {spec.spurious_strength}"
    )
    return dataset
