import numpy as np


def random_unit_vectors(rng: np.random.Generator, count: int, m: int) -> np.ndarray:
    vectors = rng.standard_normal((count, m))
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def mean_and_se(values: np.ndarray) -> tuple[float, float]:
    """Sample mean and its standard error."""
    return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(values.size))
