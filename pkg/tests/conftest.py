import math

import pytest
from hypothesis import HealthCheck, settings

from sgraphs.graph_model import (Connection, SymplecticPairSpec, build_symplectic_pair, normalize_to_unit_density,
                                 random_pair_spec, random_subgraph)

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def pair_spec():
    return random_pair_spec(6, 2, math.pi, seed=3)


@pytest.fixture(scope="session")
def pair_graph(pair_spec):
    return normalize_to_unit_density(build_symplectic_pair(pair_spec))


@pytest.fixture(scope="session")
def single_link_spec():
    """Base graph keeps its cubic vertices; one cross pair between vertices 0 and 1."""
    return SymplecticPairSpec(random_subgraph(8, seed=0), (Connection(0, 1, 0.8),), math.pi)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", None) != "call":
                continue
            lines += [value for name, value in rep.user_properties if name == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda x: int(x.split()[1][1:])):
            terminalreporter.write_line(line)
