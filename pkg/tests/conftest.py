import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from r2d.models import Rank2Graph, build_model, ledrappier_spec, single_vertex_graph  # noqa: E402


def reducible_graph():
    return Rank2Graph.make(("a", "b"), {"ea": ("a", "a"), "eb": ("b", "b")},
                           {"fa": ("a", "a"), "fb": ("b", "b")},
                           {("ea", "fa"): ("fa", "ea"), ("eb", "fb"): ("fb", "eb")})


@pytest.fixture(scope="session")
def led():
    return build_model(ledrappier_spec(), name="ledrappier")


@pytest.fixture(scope="session")
def circle():
    return build_model((2, 3), name="circle-2-3")


@pytest.fixture(scope="session")
def full():
    return build_model(("0", "1"), kind="fullshift", name="fullshift")


@pytest.fixture(scope="session")
def kg23():
    return build_model(single_vertex_graph(2, 3), name="kgraph-2-3")


@pytest.fixture(scope="session")
def reducible():
    return build_model(reducible_graph(), name="reducible")
