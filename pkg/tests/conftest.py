import pytest

from villainlab.charges import ChargePool
from villainlab.lattice import LatticeBox


@pytest.fixture(scope="session")
def small_pool():
    """Charges with support in Lambda_1, l1 <= 4 (the elementary loops)."""
    return ChargePool(LatticeBox(3, 1), 4)


@pytest.fixture(scope="session")
def medium_pool():
    """Charges with support in Lambda_2, l1 <= 6."""
    return ChargePool(LatticeBox(3, 2), 6)
