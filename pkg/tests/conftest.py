from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from ensemblectl.formats import load_system
from ensemblectl.polyalg import Poly

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=60
)
settings.load_profile("default")


def system_path(name: str) -> Path:
    return SYSTEMS / f"{name}.json"


@pytest.fixture(scope="session")
def systems():
    return {k: load_system(system_path(k)) for k in ("example1", "example2", "example3", "example4")}


@pytest.fixture
def beta():
    return Poly.x()


def F(*args):
    return Fraction(*args)
