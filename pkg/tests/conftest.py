import logging
from pathlib import Path
from typing import Final

import pytest

from toposkit.config import set_max_enum
from toposkit.fincat import (
    FinCategory,
    chain,
    commutative_square,
    cyclic_group,
    discrete,
    terminal_category,
    walking_arrow,
)
from toposkit.psh import Presheaf
from toposkit.spaces import FinSpace, sierpinski
from toposkit.workspace import Workspace

log = logging.getLogger(__name__)

FIXTURES: Final = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> str:
    return str(FIXTURES / name)


@pytest.fixture(autouse=True)
def reset_max_enum():
    """Each test starts from the default enumeration bound."""
    set_max_enum(None)
    yield
    set_max_enum(None)


@pytest.fixture
def point() -> FinCategory:
    return terminal_category()


@pytest.fixture
def arrow() -> FinCategory:
    return walking_arrow()


@pytest.fixture
def z2() -> FinCategory:
    return cyclic_group(2)


@pytest.fixture
def z3() -> FinCategory:
    return cyclic_group(3)


@pytest.fixture
def chain3() -> FinCategory:
    return chain(3)


@pytest.fixture
def square() -> FinCategory:
    return commutative_square()


@pytest.fixture
def two_points() -> FinCategory:
    return discrete(2)


@pytest.fixture(params=["terminal", "arrow", "chain3", "z2", "z3", "square"])
def fixture_category(request) -> FinCategory:
    return request.getfixturevalue({"terminal": "point"}.get(request.param, request.param))


@pytest.fixture
def sierpinski_space() -> FinSpace:
    return sierpinski()


@pytest.fixture
def arrow_presheaf(arrow: FinCategory) -> Presheaf:
    """P(a) = {x, y}, P(b) = {z}, u acting by z |-> x."""
    return Presheaf.build(arrow, {"a": ["x", "y"], "b": ["z"]}, {"u": {"z": "x"}}, name="P")


@pytest.fixture
def demo() -> Workspace:
    log.debug("Loading demo workspace...")
    workspace = Workspace()
    workspace.load(fixture_path("demo.fw"))
    return workspace
