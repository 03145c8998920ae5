from __future__ import annotations

from pathlib import Path

import pytest

from unbolt.corridor import CollisionWorld
from unbolt.kinematics import KinematicModel

DATA = Path(__file__).parent.parent / "src" / "unbolt" / "data"


@pytest.fixture(scope="session")
def model() -> KinematicModel:
    return KinematicModel.default()


@pytest.fixture(scope="session")
def world() -> CollisionWorld:
    return CollisionWorld.battery_cell()


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA
