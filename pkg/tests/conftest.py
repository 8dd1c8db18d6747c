import numpy as np
import pytest

from barrierfw import (
    CompositeProblem,
    IdentityMap,
    SimplexIndicator,
    WeightedLogBarrier,
)
from barrierfw.instances import gen_dopt, gen_pet


@pytest.fixture(scope="session")
def two_bin_problem():
    """min -ln u1 - ln u2 over the simplex; optimum (1/2, 1/2), value 2 ln 2."""
    return CompositeProblem(
        WeightedLogBarrier(np.array([1.0, 1.0])),
        IdentityMap(2),
        SimplexIndicator(2),
    )


@pytest.fixture(scope="session")
def small_pet():
    return gen_pet(25, 25, 42)


@pytest.fixture(scope="session")
def small_dopt():
    return gen_dopt(4, 15, 7)
