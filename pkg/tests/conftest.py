import numpy as np
import pytest

from liouvlab import build_basis, calibrate_bloch_sigma
from liouvlab.basis import DensityMatrix


@pytest.fixture(scope="session")
def basis3():
    return build_basis(3)


@pytest.fixture(scope="session")
def calibrated_sigma():
    """Bloch-coordinate noise level matched to the reference error budget.

    Computed once per session; every noisy acceptance-style test uses it.
    """
    return calibrate_bloch_sigma()


def random_density_matrix(rng, d=3) -> DensityMatrix:
    """Full-rank random state from a Ginibre draw."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return DensityMatrix.from_matrix(m / np.trace(m).real)


def random_hermitian(rng, d=3, scale=1.0) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (g + g.conj().T)
