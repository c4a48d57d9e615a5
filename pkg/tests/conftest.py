import numpy as np
import pytest

from atomcavity import atomic_space
from atomcavity.dynamics import DensityMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_density_matrix(dim: int, rng, space=None) -> DensityMatrix:
    """Full-rank Hilbert-Schmidt random state (generic: overlaps all modes)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = g @ g.conj().T
    m = m / np.trace(m)
    if space is None:
        space = atomic_space()
    return DensityMatrix.from_matrix(m, space)


def random_hermitian(dim: int, rng) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2.0
