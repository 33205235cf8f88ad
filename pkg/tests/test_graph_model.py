import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgraphs.graph_model import (Bond, Connection, Graph, GraphError, SymplecticPairSpec, build_symplectic_pair,
                                 normalize_to_unit_density, perturb_lengths, random_pair_spec, random_subgraph,
                                 star_graph, total_length, wrap_phase)

lengths = st.lists(st.floats(0.05, 10.0), min_size=1, max_size=8)


@given(lengths)
def test_normalization_sets_total_length_pi(ls):
    g = Graph(len(ls) + 1, tuple(Bond(0, i + 1, l) for i, l in enumerate(ls)))
    n = normalize_to_unit_density(g)
    assert total_length(n) == pytest.approx(math.pi, rel=1e-13)
    assert normalize_to_unit_density(n).total_length == pytest.approx(n.total_length, rel=1e-15)


@given(st.floats(-50.0, 50.0))
def test_wrap_phase_range(phi):
    w = wrap_phase(phi)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(phi), abs=1e-9)


@given(st.integers(0, 10_000), st.sampled_from([4, 6, 8, 10]))
def test_random_subgraph_is_connected_cubic(seed, n):
    g = random_subgraph(n, seed=seed)
    assert g.is_connected()
    assert np.all(g.degrees() == 3)
    _, _, ls, phases = g.arrays
    assert np.all((ls > 0.49) & (ls < 1.51))
    assert np.all(np.abs(phases) <= math.pi)


def test_random_subgraph_is_seeded():
    assert random_subgraph(8, seed=5) == random_subgraph(8, seed=5)
    assert random_subgraph(8, seed=5) != random_subgraph(8, seed=6)


def test_phase_policy_none_keeps_real_bonds():
    g = random_subgraph(6, phase_policy="none", seed=1)
    assert all(b.phase == 0.0 for b in g.bonds)


@given(st.integers(0, 5_000), st.sampled_from([1, 2]))
def test_random_pair_graph_is_cubic(seed, links):
    spec = random_pair_spec(8, links, seed=seed)
    g = build_symplectic_pair(spec)
    assert g.vertex_count == 16
    assert np.all(g.degrees() == 3)
    assert g.is_connected()


def test_pair_copy_is_conjugate(pair_spec):
    g = build_symplectic_pair(pair_spec)
    n = pair_spec.base.vertex_count
    m = len(pair_spec.base.bonds)
    for b, c in zip(g.bonds[:m], g.bonds[m:2 * m]):
        assert (c.i, c.j, c.length, c.phase) == (b.i + n, b.j + n, b.length, -b.phase)
    twisted = g.bonds[2 * m + 1::2]
    assert all(b.phase == pytest.approx(pair_spec.delta_phi) for b in twisted)


def test_extra_lengths_only_touch_twisted_bonds(pair_spec):
    a = build_symplectic_pair(pair_spec)
    b = build_symplectic_pair(pair_spec, [0.25, 0.0])
    assert b.total_length - a.total_length == pytest.approx(0.25)
    diff = [i for i, (x, y) in enumerate(zip(a.bonds, b.bonds)) if x != y]
    assert diff == [2 * len(pair_spec.base.bonds) + 1]


def test_perturbation_is_seeded_and_zero_is_identity(pair_graph):
    assert perturb_lengths(pair_graph, 0.0, 1) is pair_graph
    assert perturb_lengths(pair_graph, 1e-3, 1) == perturb_lengths(pair_graph, 1e-3, 1)
    p = perturb_lengths(pair_graph, 1e-3, 1)
    rel = [q.length / b.length - 1 for q, b in zip(p.bonds, pair_graph.bonds)]
    assert 0 < np.std(rel) < 5e-3


def test_star_graph():
    g = star_graph(1.0, 2.0)
    assert g.total_length == 3.0
    assert list(g.degrees()) == [2, 1, 1]


@pytest.mark.parametrize("make", [
    lambda: Bond(0, 0, 1.0),
    lambda: Bond(0, 1, -1.0),
    lambda: Graph(2, (Bond(0, 2, 1.0),)),
    lambda: Connection(1, 1, 1.0),
    lambda: random_subgraph(5),
    lambda: random_subgraph(6, phase_policy="nope"),
    lambda: SymplecticPairSpec(star_graph(1, 1), (Connection(0, 7, 1.0),)),
    lambda: perturb_lengths(star_graph(1, 1), -1.0, 0),
])
def test_invalid_inputs_raise(make):
    with pytest.raises(GraphError):
        make()
