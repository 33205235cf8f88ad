"""Spectral observables of unfolded spectra.

Every estimator takes either one :class:`UnfoldedSpectrum` or a list of them
(an ensemble).  Ensemble estimators accumulate per-realization sums, so
realizations can be processed in any order or in parallel and merged.

Doublet conventions for spectra with Kramers degeneracy:

``resolved_pairs``
    each doublet counts as one level; unit mean spacing between doublets.
``individual_levels``
    both partners are kept; the unfolding density doubles, so half of the
    nearest-neighbour spacings are zero and the rest cluster around 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, stats

from .curves import ObservableCurve

__all__ = [
    "DOUBLET_MODES",
    "UnfoldedSpectrum",
    "ChiSquareResult",
    "SlopeFit",
    "unfold",
    "unfold_ensemble",
    "spacings",
    "pooled_spacings",
    "nn_spacing_histogram",
    "chi_square_gof",
    "two_point_correlation",
    "form_factor",
    "bin_average",
    "number_variance",
    "spectral_rigidity",
    "delta3_from_sigma2",
    "repulsion_slope",
    "drop_levels",
    "poisson_spectrum",
    "picket_fence",
    "gse_form_factor",
    "gse_number_variance",
    "gse_rigidity",
]

DOUBLET_MODES = ("resolved_pairs", "individual_levels")
MISSING_FRACTION = 0.085


@dataclass
class UnfoldedSpectrum:
    """Sorted levels with unit mean spacing.

    ``source`` is a provenance tag such as ``"graph"``, ``"rmt"`` or
    ``"external"``.
    """

    values: np.ndarray
    source: str = "external"
    doublet_mode: str = "resolved_pairs"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.sort(np.asarray(self.values, dtype=float))
        if self.doublet_mode not in DOUBLET_MODES:
            raise ValueError(f"unknown doublet mode {self.doublet_mode!r}")

    def __len__(self) -> int:
        return self.values.size

    @property
    def window(self) -> tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])

    def mean_spacing(self) -> float:
        if self.values.size < 2:
            raise ValueError("need at least two levels")
        return float((self.values[-1] - self.values[0]) / (self.values.size - 1))

    def shifted(self, offset: float) -> "UnfoldedSpectrum":
        return UnfoldedSpectrum(self.values + offset, self.source, self.doublet_mode, dict(self.meta))


def _as_ensemble(data) -> list[UnfoldedSpectrum]:
    if isinstance(data, UnfoldedSpectrum):
        return [data]
    ensemble = list(data)
    if not ensemble:
        raise ValueError("empty ensemble")
    return [u if isinstance(u, UnfoldedSpectrum) else UnfoldedSpectrum(u) for u in ensemble]


# --------------------------------------------------------------------------- unfolding


def unfold(spectrum, total_length: float | None = None, doublet_mode: str = "resolved_pairs",
           graph=None) -> UnfoldedSpectrum:
    """Unfold a graph spectrum with the Weyl density ``L / pi``.

    Parameters
    ----------
    spectrum : Spectrum
        Output of :func:`sgraphs.secular.find_spectrum`.
    total_length : float, optional
        Total bond length ``L``; taken from ``graph`` or the spectrum metadata
        when omitted.
    doublet_mode : {"resolved_pairs", "individual_levels"}
    """
    if doublet_mode not in DOUBLET_MODES:
        raise ValueError(f"unknown doublet mode {doublet_mode!r}")
    if total_length is None and graph is not None:
        total_length = graph.total_length
    if total_length is None:
        total_length = spectrum.metadata.get("total_length")
    if total_length is None or not total_length > 0:
        raise ValueError("the total length of the graph is unknown")
    weyl = total_length / math.pi
    if doublet_mode == "resolved_pairs":
        values = np.asarray(spectrum.values, dtype=float)
        scale = weyl * values.size / max(int(np.sum(spectrum.multiplicities)), 1)
    else:
        values = spectrum.expanded()
        scale = weyl
    return UnfoldedSpectrum(values * scale, "graph", doublet_mode,
                            {"k_range": tuple(spectrum.k_range), "scale": scale})


def unfold_ensemble(spectra: Sequence[np.ndarray], fraction: float = 1.0, degree: int = 5,
                    source: str = "rmt") -> list[UnfoldedSpectrum]:
    """Unfold an ensemble with a polynomial fit of the pooled counting function.

    The ensemble-averaged staircase ``N(E)`` is fitted by a polynomial of
    ``degree`` over the central ``fraction`` of ranks; each realization's
    levels in that window are mapped through the fit and the result is
    rescaled so the pooled mean spacing is exactly one.
    """
    arrays = [np.sort(np.asarray(s, dtype=float)) for s in spectra]
    if not arrays:
        raise ValueError("empty ensemble")
    size = arrays[0].size
    if any(a.size != size for a in arrays):
        raise ValueError("all realizations must have the same number of levels")
    count = min(size, math.ceil(fraction * size - 1e-12))
    start = (size - count) // 2
    pooled = np.sort(np.concatenate(arrays))
    staircase = (np.arange(pooled.size) + 0.5) / len(arrays)
    lo = np.min([a[start] for a in arrays])
    hi = np.max([a[start + count - 1] for a in arrays])
    sel = (pooled >= lo) & (pooled <= hi)
    centre, width = 0.5 * (lo + hi), max(0.5 * (hi - lo), 1e-300)
    poly = np.polynomial.Polynomial.fit((pooled[sel] - centre) / width, staircase[sel], degree)
    windows = [poly((a[start:start + count] - centre) / width) for a in arrays]
    gaps = np.concatenate([np.diff(w) for w in windows])
    scale = 1.0 / gaps.mean() if gaps.size else 1.0
    return [UnfoldedSpectrum(w * scale, source, "resolved_pairs", {"degree": degree, "fraction": fraction})
            for w in windows]


def spacings(u: UnfoldedSpectrum) -> np.ndarray:
    if len(u) < 2:
        raise ValueError("too few levels for spacings")
    return np.diff(u.values)


def pooled_spacings(ensemble) -> np.ndarray:
    return np.concatenate([spacings(u) for u in _as_ensemble(ensemble)])


# --------------------------------------------------------------------------- spacing distribution


def nn_spacing_histogram(data, bins=np.linspace(0.0, 4.0, 41)) -> ObservableCurve:
    """Normalized nearest-neighbour spacing histogram.

    ``data`` is an unfolded spectrum, an ensemble, or a plain array of
    spacings.  Values are densities (unit total mass including spacings
    beyond the last edge only if the edges cover them); ``sigma`` is the
    Poisson error of each bin.
    """
    if isinstance(data, np.ndarray) and data.dtype.kind == "f":
        s = data.ravel()
    else:
        s = pooled_spacings(data)
    if s.size < 1:
        raise ValueError("too few levels for a spacing histogram")
    edges = np.asarray(bins, dtype=float)
    counts, _ = np.histogram(s, edges)
    width = np.diff(edges)
    norm = s.size * width
    return ObservableCurve(0.5 * (edges[:-1] + edges[1:]), counts / norm, counts,
                           np.sqrt(counts) / norm, "spacing_density", {"edges": edges, "total": s.size})


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    bins: int


def chi_square_gof(sample, cdf, edges, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson test of ``sample`` against a distribution with CDF ``cdf``.

    Bins are the intervals of ``edges`` plus an overflow bin above the last
    edge.  Adjacent bins are merged left to right until every expected count
    reaches ``min_expected``.
    """
    sample = np.asarray(sample, dtype=float).ravel()
    edges = np.asarray(edges, dtype=float)
    n = sample.size
    if n == 0:
        raise ValueError("empty sample")
    observed = np.append(np.histogram(sample, edges)[0], np.sum(sample >= edges[-1]))
    observed[0] += np.sum(sample < edges[0])
    cum = np.asarray(cdf(edges), dtype=float)
    probs = np.append(np.diff(cum), 1.0 - cum[-1])
    probs[0] += cum[0]
    expected = n * probs

    merged_o, merged_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            merged_o.append(acc_o)
            merged_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if merged_e:
            merged_o[-1] += acc_o
            merged_e[-1] += acc_e
        else:
            merged_o.append(acc_o)
            merged_e.append(acc_e)
    o, e = np.array(merged_o), np.array(merged_e)
    if o.size < 2:
        raise ValueError("not enough populated bins for a chi-square test")
    stat = float(np.sum((o - e) ** 2 / e))
    dof = o.size - 1
    return ChiSquareResult(stat, dof, float(stats.chi2.sf(stat, dof)), o.size)


# --------------------------------------------------------------------------- correlations


def _scatter(per_real: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Standard error of an ensemble mean from the spread of realizations."""
    r = per_real.shape[0]
    if r < 2:
        return np.full(per_real.shape[1:], np.nan)
    return per_real.std(axis=0, ddof=1) / math.sqrt(r)


def two_point_correlation(ensemble, L_edges, window: float | None = None) -> ObservableCurve:
    """Pair-distance density ``R2(L)`` with the self term excluded.

    Reference levels are restricted to the interior of each spectrum, at least
    ``max(L_edges)`` away from both ends, so every reference sees a complete
    neighbourhood.  Both signed directions are counted and the result is
    normalized per reference level and unit length, so uncorrelated levels
    give 1.
    """
    ensemble = _as_ensemble(ensemble)
    edges = np.asarray(L_edges, dtype=float)
    reach = edges[-1]
    width = np.diff(edges)
    per_real, refs = [], []
    for u in ensemble:
        lo, hi = u.window
        if window is not None and hi - lo < window:
            raise ValueError("spectrum shorter than the requested window")
        if hi - lo <= 2 * reach:
            raise ValueError("window shorter than twice the largest distance")
        vals = u.values
        ref_idx = np.nonzero((vals >= lo + reach) & (vals <= hi - reach))[0]
        counts = np.zeros(edges.size - 1)
        for idx in ref_idx:
            right = vals[idx + 1: np.searchsorted(vals, vals[idx] + reach, "right")] - vals[idx]
            left = vals[idx] - vals[np.searchsorted(vals, vals[idx] - reach, "left"): idx]
            counts += np.histogram(np.concatenate([right, left]), edges)[0]
        per_real.append(counts)
        refs.append(ref_idx.size)
    per_real = np.array(per_real)
    refs = np.array(refs, dtype=float)
    total_refs = refs.sum()
    value = per_real.sum(axis=0) / (2.0 * total_refs * width)
    density = per_real / (2.0 * np.maximum(refs, 1)[:, None] * width)
    return ObservableCurve(0.5 * (edges[:-1] + edges[1:]), value, per_real.sum(axis=0).astype(int),
                           _scatter(density), "R2", {"edges": edges, "references": int(total_refs)})


def _taper(values: np.ndarray, taper: str | None, taper_width: float) -> np.ndarray:
    if taper is None or taper == "none":
        return np.ones_like(values)
    if taper != "gaussian":
        raise ValueError(f"unknown taper {taper!r}")
    lo, hi = values[0], values[-1]
    centre, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return np.exp(-0.5 * ((values - centre) / (taper_width * half)) ** 2)


def form_factor(ensemble, tau_grid, keep_diagonal: bool = True, taper: str | None = None,
                taper_width: float = 0.35) -> ObservableCurve:
    """Spectral form factor ``<|sum_n w_n exp(2 pi i tau E_n)|^2> / sum_n w_n^2``.

    With unit weights this is ``|sum exp(2 pi i tau E_n)|^2 / N``.  The
    diagonal contributes exactly 1 at every ``tau``; ``keep_diagonal=False``
    subtracts it.  ``taper="gaussian"`` weights levels by a Gaussian centred
    on the window with standard deviation ``taper_width`` times the
    half-width, which suppresses the leakage of the ``tau = 0`` peak.
    """
    ensemble = _as_ensemble(ensemble)
    tau = np.asarray(tau_grid, dtype=float)
    per_real = np.empty((len(ensemble), tau.size))
    for r, u in enumerate(ensemble):
        vals = u.values - 0.5 * (u.values[0] + u.values[-1])
        w = _taper(u.values, taper, taper_width)
        norm = np.sum(w * w)
        total = np.zeros(tau.size)
        for chunk in np.array_split(np.arange(tau.size), max(1, tau.size * vals.size // 2_000_000)):
            phase = np.exp(2j * math.pi * np.outer(tau[chunk], vals))
            total[chunk] = np.abs(phase @ w) ** 2
        per_real[r] = total / norm - (0.0 if keep_diagonal else 1.0)
    return ObservableCurve(tau, per_real.mean(axis=0), np.full(tau.size, len(ensemble)),
                           _scatter(per_real), "form_factor",
                           {"keep_diagonal": keep_diagonal, "taper": taper, "taper_width": taper_width})


def bin_average(curve: ObservableCurve, edges) -> ObservableCurve:
    """Average a finely sampled curve over bins; sigma is the mean sigma scaled by ``1/sqrt(points)``.

    The reduced sigma is a lower bound when neighbouring points are correlated.
    """
    edges = np.asarray(edges, dtype=float)
    idx = np.digitize(curve.abscissa, edges) - 1
    centres, values, counts, sig = [], [], [], []
    for b in range(edges.size - 1):
        m = idx == b
        if not m.any():
            continue
        centres.append(0.5 * (edges[b] + edges[b + 1]))
        values.append(curve.value[m].mean())
        counts.append(int(m.sum()))
        known = curve.sigma[m][np.isfinite(curve.sigma[m])]
        sig.append(known.mean() / math.sqrt(m.sum()) if known.size else np.nan)
    return ObservableCurve(centres, values, counts, sig, curve.name, dict(curve.meta, bin_edges=edges))


# --------------------------------------------------------------------------- number variance and rigidity


EDGE_MARGIN = 1.5


def _interval_starts(u: UnfoldedSpectrum, length: float, density: float) -> np.ndarray:
    # a window bounded by levels has interior density (N - 1) / N; staying
    # 1.5 spacings inside both end levels removes that bias for rigid spectra
    lo, hi = u.window
    lo, hi = lo + EDGE_MARGIN, hi - EDGE_MARGIN
    span = hi - lo - length
    if span <= 0:
        raise ValueError("window shorter than the interval length")
    # stratified: midpoint of each of `count` equal strata
    count = max(16, math.ceil(density * span))
    return lo + span * (np.arange(count) + 0.5) / count


def _check_window(ensemble, L_max: float):
    for u in ensemble:
        lo, hi = u.window
        if hi - lo - 2 * EDGE_MARGIN < 2.0 * L_max:
            raise ValueError(f"window {hi - lo:.3g} is shorter than 2 * max(L) = {2 * L_max:.3g}")


def _start_counts(ensemble, L_grid, density) -> np.ndarray:
    return np.array([sum(_interval_starts(u, length, density).size for u in ensemble) for length in L_grid])


def number_variance(ensemble, L_grid, starts: float = 8.0) -> ObservableCurve:
    """Variance of the level count in intervals of length ``L``.

    Interval starts are stratified over each spectrum's window with ``starts``
    intervals per unit length, keeping ``EDGE_MARGIN`` away from the end
    levels.  Counts are centred on the pooled ensemble mean; ``sigma`` is the
    scatter of the per-realization contributions.
    """
    ensemble = _as_ensemble(ensemble)
    L_grid = np.asarray(L_grid, dtype=float)
    _check_window(ensemble, L_grid.max())
    counts = [[_counts_in(u, length, starts) for length in L_grid] for u in ensemble]
    pooled_mean = np.array([np.concatenate([row[j] for row in counts]).mean() for j in range(L_grid.size)])
    per_real = np.array([[np.mean((row[j] - pooled_mean[j]) ** 2) for j in range(L_grid.size)] for row in counts])
    return ObservableCurve(L_grid, per_real.mean(axis=0), _start_counts(ensemble, L_grid, starts),
                           _scatter(per_real), "number_variance", {"starts": starts, "mean_count": pooled_mean})


def _counts_in(u: UnfoldedSpectrum, length: float, starts: float) -> np.ndarray:
    x = _interval_starts(u, length, starts)
    return np.searchsorted(u.values, x + length) - np.searchsorted(u.values, x)


def _delta3_direct(values: np.ndarray, x: np.ndarray, length: float) -> np.ndarray:
    """Least-squares residual of the staircase against a line on ``[x, x + L]``.

    For levels ``e_1 < ... < e_m`` measured from the interval start,
    ``int N = sum (L - e_i)``, ``int N^2 = sum (2i - 1)(L - e_i)`` and
    ``int (E - L/2) N = sum e_i (L - e_i) / 2``.
    """
    k = np.arange(values.size, dtype=float)
    c1 = np.concatenate([[0.0], np.cumsum(values)])
    c2 = np.concatenate([[0.0], np.cumsum(values * values)])
    ck = np.concatenate([[0.0], np.cumsum(k * values)])
    a = np.searchsorted(values, x)
    b = np.searchsorted(values, x + length)
    m = (b - a).astype(float)
    s1 = c1[b] - c1[a]
    s2 = c2[b] - c2[a]
    sk = ck[b] - ck[a]
    top = x + length
    sum_k = 0.5 * (b * (b - 1.0) - a * (a - 1.0))
    int_n = m * top - s1
    # weights 2i - 1 with i = k - a + 1
    coeff_sum = 2.0 * sum_k - (2.0 * a - 1.0) * m
    int_n2 = top * coeff_sum - (2.0 * sk - (2.0 * a - 1.0) * s1)
    int_lin = 0.5 * (-s2 + (x + top) * s1 - x * top * m)
    return (int_n2 - int_n**2 / length - 12.0 * int_lin**2 / length**3) / length


def spectral_rigidity(ensemble, L_grid, method: str = "direct_fit", starts: float = 8.0,
                      quad_step: float = 0.01) -> ObservableCurve:
    """Dyson-Mehta rigidity ``Delta3(L)``.

    ``direct_fit`` averages the exact least-squares residual of the counting
    staircase over stratified intervals.  ``from_sigma2`` estimates ``Sigma2``
    on a grid of step ``quad_step`` and applies

        Delta3(L) = 2 / L^4 int_0^L (L^3 - 2 L^2 E + E^3) Sigma2(E) dE.
    """
    ensemble = _as_ensemble(ensemble)
    L_grid = np.asarray(L_grid, dtype=float)
    _check_window(ensemble, L_grid.max())
    if method == "direct_fit":
        per_real = np.empty((len(ensemble), L_grid.size))
        for r, u in enumerate(ensemble):
            vals = u.values - u.values[0]
            for j, length in enumerate(L_grid):
                x = _interval_starts(UnfoldedSpectrum(vals), length, starts)
                per_real[r, j] = np.mean(_delta3_direct(vals, x, length))
        return ObservableCurve(L_grid, per_real.mean(axis=0), _start_counts(ensemble, L_grid, starts),
                               _scatter(per_real), "delta3", {"method": method, "starts": starts})
    if method != "from_sigma2":
        raise ValueError(f"unknown rigidity method {method!r}")
    steps = max(2, int(math.ceil(L_grid.max() / quad_step)))
    fine = np.linspace(0.0, L_grid.max(), steps + 1)[1:]
    per_real = np.array([number_variance(u, fine, starts).value for u in ensemble])
    per_real = np.column_stack([np.zeros(len(ensemble)), per_real])
    fine = np.concatenate([[0.0], fine])
    out = np.array([[delta3_from_sigma2(length, fine, row) for length in L_grid] for row in per_real])
    return ObservableCurve(L_grid, out.mean(axis=0), _start_counts(ensemble, L_grid, starts),
                           _scatter(out), "delta3", {"method": method, "starts": starts, "quad_step": quad_step})


def delta3_from_sigma2(length: float, grid, sigma2) -> float:
    """Apply the ``Sigma2 -> Delta3`` integral transform to tabulated ``Sigma2``.

    ``sigma2`` is either an array on ``grid`` (linearly interpolated, trapezoid
    rule on a refined mesh) or a callable.
    """
    if callable(sigma2):
        f = lambda e: (length**3 - 2 * length**2 * e + e**3) * sigma2(e)
        val, _ = integrate.quad(f, 0.0, length, limit=200)
        return 2.0 * val / length**4
    grid = np.asarray(grid, dtype=float)
    e = np.union1d(grid[grid < length], [length])
    s2 = np.interp(e, grid, np.asarray(sigma2, dtype=float))
    kernel = length**3 - 2 * length**2 * e + e**3
    return 2.0 * float(np.trapezoid(kernel * s2, e)) / length**4


# --------------------------------------------------------------------------- repulsion


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    points: int


def repulsion_slope(data, fit_range: tuple[float, float] = (0.05, 0.3), min_points: int = 30) -> SlopeFit:
    """Log-log slope of the empirical integrated spacing distribution.

    ``I(s)`` is evaluated at every observed spacing inside ``fit_range``
    (as rank over sample size) and ``log I`` is regressed on ``log s``.
    """
    if isinstance(data, np.ndarray) and data.dtype.kind == "f":
        s = np.sort(data.ravel())
    else:
        s = np.sort(pooled_spacings(data))
    lo, hi = fit_range
    ranks = np.arange(1, s.size + 1) / s.size
    keep = (s >= lo) & (s <= hi) & (s > 0)
    if keep.sum() < min_points:
        raise ValueError(f"only {int(keep.sum())} spacings in {fit_range}; need {min_points}")
    fit = stats.linregress(np.log(s[keep]), np.log(ranks[keep]))
    return SlopeFit(float(fit.slope), float(fit.stderr), int(keep.sum()))


# --------------------------------------------------------------------------- transforms and controls


def drop_levels(u: UnfoldedSpectrum, fraction: float = MISSING_FRACTION, seed: int = 0,
                renormalize: bool = True) -> UnfoldedSpectrum:
    """Randomly remove ``fraction`` of the levels to emulate missed resonances.

    With ``renormalize`` the survivors are rescaled back to unit mean spacing.
    """
    if not 0.0 <= fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    keep = rng.random(len(u)) >= fraction
    vals = u.values[keep]
    if renormalize and vals.size:
        vals = vals * (vals.size / len(u))
    return UnfoldedSpectrum(vals, u.source, u.doublet_mode, dict(u.meta, dropped=fraction))


def poisson_spectrum(levels: int, seed: int = 0) -> UnfoldedSpectrum:
    """Uncorrelated levels with unit-rate exponential gaps."""
    rng = np.random.default_rng(seed)
    return UnfoldedSpectrum(np.cumsum(rng.exponential(1.0, levels)), "external")


def picket_fence(levels: int, offset: float = 0.0) -> UnfoldedSpectrum:
    return UnfoldedSpectrum(offset + np.arange(1, levels + 1, dtype=float), "external")


# --------------------------------------------------------------------------- symplectic reference curves


def gse_form_factor(tau):
    """GSE form factor ``tau/2 - (tau/4) log|1 - tau|`` below 2, 1 above."""
    tau = np.abs(np.asarray(tau, dtype=float))
    out = np.ones_like(tau)
    low = tau < 2.0
    t = tau[low]
    with np.errstate(divide="ignore"):
        out[low] = 0.5 * t - 0.25 * t * np.log(np.abs(1.0 - t))
    return out


def gse_number_variance(L):
    """Reference ``Sigma2(L)`` from the GSE form factor.

    ``Sigma2(L) = (2 / pi^2) int_0^inf K(tau) sin^2(pi L tau) / tau^2 dtau``;
    the part with ``K = 1`` integrates to ``L``.
    """
    L = np.atleast_1d(np.asarray(L, dtype=float))
    out = np.empty_like(L)
    for i, length in enumerate(L):
        def f(t):
            if t == 0.0:
                return -(math.pi * length) ** 2
            return (float(gse_form_factor(t)) - 1.0) * math.sin(math.pi * length * t) ** 2 / (t * t)
        a, _ = integrate.quad(f, 0.0, 1.0, limit=400, epsabs=1e-11)
        b, _ = integrate.quad(f, 1.0, 2.0, limit=400, epsabs=1e-11)
        out[i] = length + 2.0 / math.pi**2 * (a + b)
    return out if out.size > 1 else out[0]


def gse_rigidity(L):
    """Reference ``Delta3(L)`` from :func:`gse_number_variance`."""
    L = np.atleast_1d(np.asarray(L, dtype=float))
    fine = np.linspace(0.0, L.max(), 801)
    s2 = np.concatenate([[0.0], gse_number_variance(fine[1:])])
    out = np.array([delta3_from_sigma2(length, fine, s2) for length in L])
    return out if out.size > 1 else out[0]
