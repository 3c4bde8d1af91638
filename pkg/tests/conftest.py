import numpy as np
import pytest

from seaqtsim.dynamics import GateParams
from seaqtsim.harness import StateMethod, make_rng, random_density_matrix
from seaqtsim.linalg import Matrix


@pytest.fixture(autouse=True)
def single_process(monkeypatch: pytest.MonkeyPatch) -> None:
    """Run parallel maps in-process unless a test asks otherwise."""
    monkeypatch.setenv("SEAQT_SIM_THREADS", "1")


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(20240611)


@pytest.fixture
def params() -> GateParams:
    """Parameters calibrated at δε = 80 μV."""
    return GateParams()


@pytest.fixture
def mixed_state(rng: np.random.Generator) -> Matrix:
    return random_density_matrix(rng, StateMethod.GINIBRE)
