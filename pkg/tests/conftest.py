import numpy as np
import pytest

from winterbottom_lab import AnisotropySpec

SQUARE = [(1, 1), (-1, 1), (-1, -1), (1, -1)]


def l1():
    return AnisotropySpec.polytope(SQUARE)


def family():
    """Four anisotropies spanning smooth, crystalline and asymmetric cases."""
    return {
        "euclidean": AnisotropySpec.euclidean(),
        "l1": l1(),
        "shifted": AnisotropySpec.shifted([0.0, 0.25]),
        "quadratic": AnisotropySpec.quadratic([[2.0, 0.3], [0.3, 0.8]]),
    }


@pytest.fixture(params=sorted(family()))
def any_phi(request):
    return family()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
