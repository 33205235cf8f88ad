import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from sgraphs.spacing_theory import (WIGNER_KINDS, SpacingLaw, coupling_cdf, coupling_density_pV,
                                    export_theory_curves, integrated_distribution, khat1, loglog_slope,
                                    single_pair_mean, single_pair_pdf, single_pair_pdf_unscaled, wigner_cdf,
                                    wigner_pdf)

# frozen from an independent scipy dblquad over (s, phi) on [0, 12] x [0, pi/2]
SINGLE_PAIR_MEAN = 1.324154970073843
SINGLE_PAIR_PDF = {0.5: 0.4971862234691382, 1.0: 1.0957250424857392, 1.5: 0.3585961398118677}
SUP_DISTANCE_TO_GSE = 0.11873187495663062

LAWS = WIGNER_KINDS + ("SinglePairBonds",)


@pytest.mark.parametrize("kind", LAWS)
def test_unit_mass_and_mean(kind):
    law = SpacingLaw(kind)
    assert law.mass() == pytest.approx(1.0, abs=1e-10)
    assert law.mean() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind,beta", [("WignerGOE", 1), ("WignerGUE", 2), ("WignerGSE", 4)])
def test_wigner_small_s_power(kind, beta):
    s = np.array([1e-4, 2e-4])
    p = wigner_pdf(kind, s)
    assert math.log(p[1] / p[0]) / math.log(2) == pytest.approx(beta, abs=1e-3)


@given(st.sampled_from(WIGNER_KINDS), st.floats(0.0, 5.0))
def test_wigner_cdf_integrates_pdf(kind, s):
    ref, _ = integrate.quad(lambda x: wigner_pdf(kind, x), 0.0, s, epsabs=1e-13)
    assert float(wigner_cdf(kind, s)) == pytest.approx(ref, abs=1e-10)


def test_single_pair_mean_matches_oracle():
    assert single_pair_mean() == pytest.approx(SINGLE_PAIR_MEAN, rel=1e-10)


def test_single_pair_pdf_matches_oracle():
    s = np.array(list(SINGLE_PAIR_PDF))
    np.testing.assert_allclose(single_pair_pdf(s), list(SINGLE_PAIR_PDF.values()), rtol=1e-9)


def test_single_pair_quartic_onset():
    # p0(s) -> 16 s^4 int sin cos^2 = (16/3) s^4
    s = 1e-4
    assert single_pair_pdf_unscaled(s) / s**4 == pytest.approx(16.0 / 3.0, rel=1e-6)


def test_single_pair_quadrature_converged():
    s = np.linspace(0.0, 4.0, 81)
    np.testing.assert_allclose(single_pair_pdf_unscaled(s, 256), single_pair_pdf_unscaled(s, 512), atol=1e-13)
    with pytest.raises(ValueError):
        single_pair_pdf_unscaled(s, 100)


def test_single_pair_differs_from_gse_by_some_percent():
    s = np.linspace(0.0, 4.0, 4001)
    gap = np.abs(SpacingLaw("SinglePairBonds").pdf(s) - SpacingLaw("WignerGSE").pdf(s))
    assert gap.max() == pytest.approx(SUP_DISTANCE_TO_GSE, abs=2e-6)


@given(st.floats(1e-6, 50.0))
def test_khat1_matches_bessel(t):
    assert float(khat1(t)) == pytest.approx(t * special.k1(t), rel=1e-12)


@given(st.floats(0.0, 1e-6))
def test_khat1_small_argument(t):
    # scipy's k1 overflows for subnormal arguments; the limit is one
    assert float(khat1(t)) == pytest.approx(1.0, abs=1e-11)


def test_khat1_series_branch_is_continuous():
    t = np.array([0.999999e-6, 1.000001e-6])
    assert abs(khat1(t)[0] - khat1(t)[1]) < 1e-12


def test_coupling_density_normalized():
    total, _ = integrate.quad(lambda z: float(coupling_density_pV(z)), 0.0, np.inf, limit=400)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert float(coupling_density_pV(0.0)) == pytest.approx(math.pi**2 / 4)


@given(st.floats(0.0, 4.0))
def test_coupling_cdf_integrates_density(z):
    ref, _ = integrate.quad(lambda x: float(coupling_density_pV(x)), 0.0, z, epsabs=1e-12, limit=200)
    assert float(coupling_cdf(z)) == pytest.approx(ref, abs=1e-9)


def test_coupling_cdf_near_zero():
    z = np.array([0.0, 1e-300, 1e-14, 1e-12])
    out = coupling_cdf(z)
    assert np.all(np.isfinite(out)) and out[0] == 0.0
    np.testing.assert_allclose(out[1:], math.pi**2 * z[1:] / 4, rtol=1e-4)


def test_coupling_density_rejects_negative():
    with pytest.raises(ValueError):
        coupling_density_pV(-1.0)


@pytest.mark.parametrize("kind", LAWS)
def test_integrated_distribution_of_density_matches_cdf(kind):
    law = SpacingLaw(kind)
    grid = np.linspace(0.0, 3.0, 31)
    np.testing.assert_allclose(integrated_distribution(law.pdf, grid), law.cdf(grid), atol=1e-12)
    assert np.all(np.diff(law.cdf(grid)) >= 0)


def test_empirical_integrated_distribution():
    sample = np.array([0.5, 1.0, 1.0, 2.0])
    np.testing.assert_allclose(integrated_distribution(sample, [0.4, 1.0, 3.0]), [0.0, 0.75, 1.0])


def test_loglog_slope_of_power_law():
    s = np.geomspace(0.01, 0.3, 20)
    assert loglog_slope(s, 3.0 * s**5) == pytest.approx(5.0)


def test_export_theory_curves(tmp_path):
    paths = export_theory_curves(tmp_path, points=11)
    assert sorted(p.name for p in paths) == sorted(f"theory_{k}.csv" for k in LAWS)
    assert paths[0].read_text().splitlines()[0] == "s,pdf,cdf"


def test_unknown_law():
    with pytest.raises(ValueError):
        SpacingLaw("Poisson")
