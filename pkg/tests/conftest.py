from __future__ import annotations

import pytest

from gridcm import ChronicRow, EngineConfig, initial_state
from gridcm.fixtures import desk14, enum_hub, radial4, t3, t3_g3


@pytest.fixture(scope="session")
def grid_t3():
    return t3()


@pytest.fixture(scope="session")
def grid_t3_g3():
    return t3_g3()


@pytest.fixture(scope="session")
def grid_radial4():
    return radial4()


@pytest.fixture(scope="session")
def grid_enum_hub():
    return enum_hub()


@pytest.fixture(scope="session")
def grid_desk14():
    return desk14()


@pytest.fixture(scope="session")
def config():
    return EngineConfig()


def t3_row(load=100.0, wind=100.0, plan_g1=0.0) -> ChronicRow:
    return ChronicRow(loads={"D3": load}, renewables={"G2": wind}, plan={"G1": plan_g1})


def t3g3_row(load=200.0, wind=100.0, plan_g1=100.0, plan_g3=0.0) -> ChronicRow:
    return ChronicRow(
        loads={"D3": load}, renewables={"G2": wind}, plan={"G1": plan_g1, "G3": plan_g3}
    )


@pytest.fixture
def t3_state(grid_t3, config):
    """T3 solved with the canonical reference injections: wind +100 at S2,
    load 100 at S3, slack balancing at S1 (to zero)."""
    return initial_state(grid_t3, t3_row(), config)


@pytest.fixture
def t3g3_state(grid_t3_g3, config):
    """T3+G3 congested base case: L13 at 100 MW against a 90 MW limit."""
    return initial_state(grid_t3_g3, t3g3_row(), config)
