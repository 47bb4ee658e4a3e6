import numpy as np
import pytest

from frachs.forms import assemble
from frachs.grid import RadialGrid


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory, ):
    import os

    os.environ["FRACHS_CACHE_DIR"] = str(tmp_path_factory.mktemp("frachs-cache"))


@pytest.fixture(scope="session")
def grid_n3_std():
    return RadialGrid(n=3.0, r_min=1e-6, R=1.0, N=400)


@pytest.fixture(scope="session")
def forms_n3_std(grid_n3_std):
    return assemble(grid_n3_std, 3.0, 1.0, s=0.5)


@pytest.fixture(scope="session")
def grid_n3_small():
    return RadialGrid(n=3.0, r_min=1e-6, R=1.0, N=200)


@pytest.fixture(scope="session")
def forms_n3_small(grid_n3_small):
    return assemble(grid_n3_small, 3.0, 1.0, s=0.5)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - np.mean(a)
    b = b - np.mean(b)
    return float(np.sum(a * b) / np.sqrt(np.sum(a * a) * np.sum(b * b)))
