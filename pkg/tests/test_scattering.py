import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgraphs.graph_model import GraphError, build_symplectic_pair, normalize_to_unit_density, star_graph
from sgraphs.scattering import (ExtractionError, PhaseSamples, PortSet, extract_spectrum_from_phase, match_levels,
                                reflection_phase_spectrum, remap_to_phase, s_matrix, s_matrix_batch,
                                transmission_map)
from sgraphs.secular import find_spectrum


@pytest.fixture(scope="module")
def link_graph(single_link_spec):
    return normalize_to_unit_density(build_symplectic_pair(single_link_spec))


@given(st.floats(0.5, 40.0))
def test_unitary_without_absorption(pair_graph, k):
    s = s_matrix_batch(pair_graph, PortSet((0, 2, 7)), [k])[0]
    if np.all(np.isfinite(s)):
        np.testing.assert_allclose(s.conj().T @ s, np.eye(3), atol=1e-9)


def test_absorption_reduces_reflection(link_graph):
    ks = np.linspace(2.0, 12.0, 50)
    s = s_matrix_batch(link_graph, PortSet((2,)), ks, eta=0.05)[:, 0, 0]
    assert np.all(np.abs(s) < 1.0)


def test_no_transmission_to_mirror_port(single_link_spec):
    g = build_symplectic_pair(single_link_spec)
    n = single_link_spec.base.vertex_count
    rng = np.random.default_rng(0)
    s = s_matrix_batch(g, PortSet((2, 2 + n)), rng.uniform(1, 50, 40))
    assert np.max(np.abs(s[:, 0, 1]) ** 2) < 1e-18
    np.testing.assert_allclose(s[:, 0, 0], s[:, 1, 1], atol=1e-10)


def test_transmission_returns_off_twist(single_link_spec):
    import dataclasses
    spec = dataclasses.replace(single_link_spec, delta_phi=0.5 * math.pi)
    g = build_symplectic_pair(spec)
    n = spec.base.vertex_count
    s = s_matrix_batch(g, PortSet((2, 2 + n)), np.linspace(1, 50, 200))
    assert np.max(np.abs(s[:, 0, 1]) ** 2) > 1e-3


def test_single_matrix_checks():
    g = star_graph(1.0, 1.3)
    sample = s_matrix(g, PortSet((1,)), 2.0)
    assert sample.unitarity_defect() < 1e-12
    with pytest.raises(GraphError):
        s_matrix(g, PortSet((5,)), 2.0)
    with pytest.raises(GraphError):
        PortSet((1, 1))
    with pytest.raises(ValueError):
        s_matrix_batch(g, PortSet((1,)), [2.0], eta=-1.0)


def test_phase_winds_once_per_level(link_graph):
    ref = find_spectrum(link_graph, (3.0, 23.0))
    k = np.arange(3.0, 23.0, 1e-3)
    ph = reflection_phase_spectrum(link_graph, 2, k, eta=0.0)
    assert not ph.suspicious.any()
    assert abs(ph.windings() - len(ref)) <= 1
    assert np.all(np.diff(ph.alpha) > -1e-9)


def test_cable_adds_linear_drift(link_graph):
    k = np.arange(3.0, 6.0, 1e-3)
    a = reflection_phase_spectrum(link_graph, 2, k)
    b = reflection_phase_spectrum(link_graph, 2, k, cable_length=0.7, cable_offset=0.3)
    np.testing.assert_allclose(b.alpha - a.alpha, 0.3 - 1.4 * k, atol=1e-9)


def test_coarse_grid_is_flagged(link_graph):
    # about one sample per level: several wrapped steps land near +-pi
    k = np.linspace(1.0, 400.0, 400)
    assert reflection_phase_spectrum(link_graph, 2, k).suspicious.any()
    with pytest.raises(ValueError):
        reflection_phase_spectrum(link_graph, 2, k, strict=True)


def test_extraction_recovers_doublets(link_graph):
    ref = find_spectrum(link_graph, (2.0, 42.0))
    k = np.arange(2.0, 42.0, 2e-4)
    found = extract_spectrum_from_phase(reflection_phase_spectrum(link_graph, 2, k))
    recall, offsets = match_levels(ref.values, found.values, 0.5)
    assert recall >= 0.95
    assert np.median(np.abs(offsets)) < 0.1


def test_extraction_survives_feed_line_drift(link_graph):
    ref = find_spectrum(link_graph, (2.0, 22.0))
    k = np.arange(2.0, 22.0, 2e-4)
    ph = reflection_phase_spectrum(link_graph, 2, k, cable_length=3.0)
    recall, _ = match_levels(ref.values, extract_spectrum_from_phase(ph).values, 0.5)
    assert recall >= 0.95


def test_extraction_errors():
    flat = PhaseSamples(np.linspace(0, 1, 50), np.zeros(50))
    with pytest.raises(ExtractionError):
        extract_spectrum_from_phase(PhaseSamples(np.array([0.0, 1.0]), np.zeros(2)))
    with pytest.raises(ExtractionError):
        extract_spectrum_from_phase(flat, discriminator=-1)


def test_winding_split_separates_overlapping_steps():
    k = np.linspace(0, 10, 20001)
    width = 0.02
    # two 2 pi steps 0.1 apart look like one broad bump in the derivative
    alpha = sum(2 * np.arctan((k - c) / width) + math.pi for c in (3.0, 3.1, 7.0))
    ph = PhaseSamples(k, alpha)
    merged = extract_spectrum_from_phase(ph, split_overlaps=False).values
    split = extract_spectrum_from_phase(ph, split_overlaps=True).values
    assert match_levels([3.0, 3.1, 7.0], split, 0.02)[0] == 1.0
    assert merged.size >= 2


def test_match_levels_is_one_to_one():
    recall, off = match_levels([1.0, 1.1, 5.0], [1.05], 0.2)
    assert recall == pytest.approx(1 / 3)
    assert off.size == 1
    assert match_levels([1.0], [], 0.1) == (0.0, pytest.approx(np.zeros(0)))
    with pytest.raises(ValueError):
        match_levels([], [1.0], 0.1)


def test_transmission_map_and_remap(single_link_spec, tmp_path):
    n = single_link_spec.base.vertex_count
    ports = PortSet((2, 2 + n))
    rows = np.linspace(0.0, 0.3, 4)
    k = np.linspace(1.0, 5.0, 21)
    tmap = transmission_map(single_link_spec, ports, rows, k)
    assert tmap.values.shape == (4, 21)
    assert np.all((tmap.values >= 0) & (tmap.values <= 1 + 1e-12))
    assert tmap.values[0].max() < 1e-18
    phased = remap_to_phase(tmap, np.linspace(math.pi, 3 * math.pi, 9))
    assert phased.values.shape == (8, 21)
    assert phased.row_name == "delta_phi"
    with pytest.raises(ValueError):
        remap_to_phase(phased, [0, 1])
    lines = tmap.to_csv(tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "delta_l,k,value" and len(lines) == 1 + 4 * 21
    grid = tmap.to_grid_text(tmp_path / "t.txt").read_text().splitlines()
    assert len(grid) == 2 + 4


def test_phase_twist_rows(single_link_spec):
    n = single_link_spec.base.vertex_count
    tmap = transmission_map(single_link_spec, PortSet((2, 2 + n)), [0.0, math.pi / 2], np.linspace(1, 20, 60),
                            twist="phase")
    assert tmap.values[0].max() < 1e-18 < tmap.values[1].max()
    with pytest.raises(ValueError):
        transmission_map(single_link_spec, PortSet((2, 2 + n)), [0.0], [1.0], twist="twirl")
