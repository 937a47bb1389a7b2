import pytest

from erank import equivalence as eq
from erank import semantics as se

BATTERY_NAMES = ("F2", "F3", "F4", "F5", "F7", "F8", "F9")


@pytest.fixture(scope="session")
def battery():
    return [se.make_structure(name) for name in BATTERY_NAMES]


@pytest.fixture(scope="session")
def corpus():
    formulas = eq.generate_corpus(seed=20240601, size=220)
    assert len(formulas) >= 200
    return formulas


@pytest.fixture(scope="session")
def small_battery():
    return [se.make_structure(name) for name in ("F2", "F3", "F4", "F5")]
