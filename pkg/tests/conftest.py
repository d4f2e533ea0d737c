import pytest

from iongate.crystal import Crystal


@pytest.fixture(scope="session")
def crystal2() -> Crystal:
    return Crystal.build(2)


@pytest.fixture(scope="session")
def crystal3() -> Crystal:
    return Crystal.build(3)


@pytest.fixture(scope="session")
def crystal20() -> Crystal:
    return Crystal.build(20)


@pytest.fixture(scope="session")
def crystal40() -> Crystal:
    return Crystal.build(40)
