import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgraphs.graph_model import build_symplectic_pair, normalize_to_unit_density, random_subgraph, star_graph
from sgraphs.secular import (NoEigenvaluesError, PoleError, SolverOptions, Spectrum, assemble_h, find_spectrum,
                             pole_positions, secular_batch, verify_symplectic_symmetry, write_spectrum_csv)

GOLDEN = (1 + math.sqrt(5)) / 2


def test_star_graph_matches_interval_spectrum():
    # two bonds through a degree-two vertex form one interval with Neumann ends
    g = star_graph(1.0, GOLDEN)
    total = 1.0 + GOLDEN
    spec = find_spectrum(g, (0.5, 40.0))
    n = np.arange(1, spec.count + 1)
    np.testing.assert_allclose(spec.values, n * math.pi / total, rtol=1e-9)
    assert np.all(spec.multiplicities == 1)
    assert spec.metadata["weyl_ok"]


@given(st.floats(0.3, 30.0))
def test_secular_matrix_is_hermitian(k):
    g = random_subgraph(6, seed=2)
    try:
        h = assemble_h(g, k)
    except PoleError:
        return
    np.testing.assert_allclose(h, h.conj().T, atol=1e-12)


def test_batch_matches_single(pair_graph):
    ks = np.array([1.3, 2.7, 5.1])
    batch = secular_batch(pair_graph, ks)
    for k, h in zip(ks, batch):
        np.testing.assert_allclose(h, assemble_h(pair_graph, k), atol=1e-12)


def test_pole_is_reported():
    g = star_graph(1.0, GOLDEN)
    with pytest.raises(PoleError):
        assemble_h(g, math.pi)
    np.testing.assert_allclose(pole_positions(g, 0.1, 7.0), [math.pi / GOLDEN, math.pi, 2 * math.pi / GOLDEN,
                                                                3 * math.pi / GOLDEN, 2 * math.pi])


def test_no_levels_raises():
    with pytest.raises(NoEigenvaluesError):
        find_spectrum(star_graph(1.0, GOLDEN), (0.1, 0.2))


def test_symplectic_pair_has_doublets(pair_graph):
    spec = find_spectrum(pair_graph, (1.0, 60.0))
    assert np.all(spec.multiplicities == 2)
    assert spec.metadata["max_doublet_split"] < 1e-8 * spec.metadata["mean_spacing"]


def test_symmetry_classification(pair_spec):
    ks = np.linspace(1.1, 9.3, 5)
    sym = verify_symplectic_symmetry(build_symplectic_pair(pair_spec), ks)
    assert sym.verdict == "symplectic" and sym.t_squared_symplectic == -1
    orth = verify_symplectic_symmetry(build_symplectic_pair(dataclasses.replace(pair_spec, delta_phi=2 * math.pi)), ks)
    assert orth.verdict == "orthogonal" and orth.t_squared_orthogonal == 1
    none = verify_symplectic_symmetry(build_symplectic_pair(dataclasses.replace(pair_spec, delta_phi=1.5 * math.pi)), ks)
    assert none.verdict == "none"


def test_doublet_splitting_is_linear_in_twist_offset(pair_spec):
    def splits(delta):
        g = normalize_to_unit_density(build_symplectic_pair(dataclasses.replace(pair_spec, delta_phi=math.pi + delta)))
        v = find_spectrum(g, (1.0, 21.0)).expanded()
        return v[1::2] - v[0::2]
    a, b = splits(1e-3), splits(2e-3)
    assert a.size >= 8
    np.testing.assert_allclose(a / b, 0.5, atol=1e-4)


def test_spectrum_independent_of_workers(pair_graph):
    a = find_spectrum(pair_graph, (1.0, 30.0), SolverOptions(workers=1))
    b = find_spectrum(pair_graph, (1.0, 30.0), SolverOptions(workers=2))
    np.testing.assert_array_equal(a.values, b.values)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum([2.0, 1.0], [1, 1], (0.5, 3.0))
    with pytest.raises(ValueError):
        find_spectrum(star_graph(1, 2), (2.0, 1.0))


def test_csv_and_sidecar(tmp_path, pair_graph):
    spec = find_spectrum(pair_graph, (1.0, 12.0))
    path = write_spectrum_csv(spec, tmp_path / "s.csv")
    rows = path.read_text().splitlines()
    assert rows[0] == "index,k,multiplicity"
    assert len(rows) == len(spec) + 1
    assert float(rows[1].split(",")[1]) == spec.values[0]
    assert (tmp_path / "s.csv.json").is_file()
