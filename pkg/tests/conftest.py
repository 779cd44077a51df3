import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nlhide import ParityBlockParams, ghz_complement_ensemble, parity_block_ensemble


@pytest.fixture(scope="session")
def ghz22():
    return ghz_complement_ensemble(2, 2)


@pytest.fixture(scope="session")
def ghz23():
    return ghz_complement_ensemble(2, 3)


@pytest.fixture(scope="session")
def ghz32():
    return ghz_complement_ensemble(3, 2)


@pytest.fixture(scope="session")
def parity2222():
    return parity_block_ensemble(ParityBlockParams(2, 2, 2, 2))


@pytest.fixture(scope="session")
def parity2212():
    return parity_block_ensemble(ParityBlockParams(2, 2, 1, 2))
