import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgraphs.rmt import (ENSEMBLE_KINDS, EnsembleSpec, central_fraction, doublet_centres, ensemble_eigenvalues,
                         sample, sample_matrix, write_eigenvalues_csv)


def _spec(kind, dim=20, **kw):
    if kind == "CoupledBlock":
        kw.setdefault("sub_dim", dim // 2)
    return EnsembleSpec(kind, dim, **kw)


@given(st.sampled_from(ENSEMBLE_KINDS), st.integers(0, 1000), st.integers(0, 50))
def test_matrices_are_hermitian(kind, seed, index):
    h = sample_matrix(_spec(kind, seed=seed), index)
    np.testing.assert_allclose(h, h.conj().T, atol=1e-14)


@pytest.mark.parametrize("kind", ["GSE", "CoupledBlock"])
def test_kramers_doublets(kind):
    vals = np.linalg.eigvalsh(sample_matrix(_spec(kind, 40, seed=4), 0))
    centres, gap = doublet_centres(vals)
    assert centres.size == 20
    assert gap < 1e-10 * np.ptp(vals)
    assert np.min(np.diff(centres)) > 1e3 * gap


def test_goe_is_real_and_gue_is_not():
    assert np.isrealobj(sample_matrix(_spec("GOE"), 0))
    assert np.abs(sample_matrix(_spec("GUE"), 0).imag).max() > 0


def test_realizations_are_seeded_and_independent():
    spec = _spec("GUE", seed=7)
    np.testing.assert_array_equal(sample_matrix(spec, 3), sample_matrix(spec, 3))
    assert not np.allclose(sample_matrix(spec, 3), sample_matrix(spec, 4))
    assert not np.allclose(sample_matrix(spec, 3), sample_matrix(_spec("GUE", seed=8), 3))


def test_sample_streams_all_realizations():
    spec = _spec("GOE", 6, realizations=5)
    mats = list(sample(spec))
    assert len(mats) == 5
    np.testing.assert_array_equal(mats[2], sample_matrix(spec, 2))


def test_results_independent_of_workers():
    spec = _spec("GSE", 16, realizations=6, seed=2)
    a = ensemble_eigenvalues(spec, workers=1)
    b = ensemble_eigenvalues(spec, workers=2)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


def test_gue_variance():
    spec = _spec("GUE", 200, seed=1)
    h = sample_matrix(spec, 0)
    off = h[np.triu_indices(200, 1)]
    assert np.mean(np.abs(off) ** 2) == pytest.approx(0.5, rel=0.02)


def test_coupled_block_scales():
    n = 200
    spec = _spec("CoupledBlock", 2 * n, seed=3)
    h = sample_matrix(spec, 0)
    h0 = h[:n, :n]
    np.testing.assert_allclose(h[n:, n:], h0.conj())
    off = h0[np.triu_indices(n, 1)]
    assert np.mean(np.abs(off) ** 2) == pytest.approx(n / math.pi**2, rel=0.03)
    v = h[:n, n:]
    np.testing.assert_allclose(v, -v.T, atol=1e-14)
    assert np.linalg.matrix_rank(v) == 2


def test_uncoupled_blocks_are_conjugate_copies():
    n = 30
    h = sample_matrix(_spec("CoupledBlock", 2 * n, coupling_scale=0.0), 0)
    assert np.all(h[:n, n:] == 0)


def test_coupled_block_centre_spacing_near_one():
    n = 100
    s = []
    for i in range(40):
        c, _ = doublet_centres(np.linalg.eigvalsh(sample_matrix(_spec("CoupledBlock", 2 * n, seed=9), i)))
        s.append(np.diff(central_fraction(c, 0.1)))
    assert np.mean(np.concatenate(s)) == pytest.approx(1.0, rel=0.05)


def test_central_fraction():
    v = np.arange(10)
    np.testing.assert_array_equal(central_fraction(v, 0.2), [4, 5])
    np.testing.assert_array_equal(central_fraction(v, 0.3), [3, 4, 5])
    np.testing.assert_array_equal(central_fraction(v, 1.0), v)
    with pytest.raises(ValueError):
        central_fraction(v, 0.0)


def test_doublet_centres_requires_pairs():
    with pytest.raises(ValueError):
        doublet_centres([1.0, 2.0, 3.0])


@pytest.mark.parametrize("kw", [dict(kind="XYZ", dim=4), dict(kind="GSE", dim=5), dict(kind="GOE", dim=1),
                                dict(kind="CoupledBlock", dim=10, sub_dim=4),
                                dict(kind="GUE", dim=4, realizations=0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        EnsembleSpec(**kw)


def test_csv(tmp_path):
    path = write_eigenvalues_csv([np.array([1.0, 2.0]), np.array([3.0])], tmp_path / "e.csv")
    assert path.read_text().splitlines() == ["realization,index,value", "0,0,1.0", "0,1,2.0", "1,0,3.0"]
