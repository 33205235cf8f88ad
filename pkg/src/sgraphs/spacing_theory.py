"""Closed-form nearest-neighbour spacing laws.

Wigner surmises for the three Gaussian ensembles, the Bessel-K1 density of the
squared coupling between two Kramers partners, and the spacing law of two
conjugate chaotic blocks joined by a single pair of bonds.

The single-pair law is

    p0(s) = 16 s^4 int_0^{pi/2} sin(phi) cos(phi)^2 exp(-4 s^2 cos(phi)^2 / pi)
            * Khat1(pi s sin(phi)) dphi

with ``Khat1(t) = t K1(t)``; it has unit mass and mean ``s_bar ~ 1.3241550``,
and ``p(s) = s_bar p0(s_bar s)`` is the version with unit mean.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, special

__all__ = [
    "WIGNER_KINDS",
    "wigner_pdf",
    "wigner_cdf",
    "khat1",
    "coupling_density_pV",
    "coupling_cdf",
    "single_pair_pdf_unscaled",
    "single_pair_mean",
    "single_pair_pdf",
    "SpacingLaw",
    "integrated_distribution",
    "loglog_slope",
    "export_theory_curves",
]

WIGNER_KINDS = ("WignerGOE", "WignerGUE", "WignerGSE")
# the single-pair tail decays like exp(-pi s); beyond 16 it is below 1e-15
S_MAX = 16.0
DEFAULT_NODES = 256
_KHAT_SERIES_CUTOFF = 1e-6

# prefactor a and exponent scale b of p(s) = a s^beta exp(-b s^2)
_WIGNER = {
    "WignerGOE": (math.pi / 2.0, 1, math.pi / 4.0),
    "WignerGUE": (32.0 / math.pi**2, 2, 4.0 / math.pi),
    "WignerGSE": (2.0**18 / (3.0**6 * math.pi**3), 4, 64.0 / (9.0 * math.pi)),
}


def _check_kind(kind: str) -> tuple[float, int, float]:
    try:
        return _WIGNER[kind]
    except KeyError:
        raise ValueError(f"unknown Wigner kind {kind!r}; expected one of {WIGNER_KINDS}") from None


def wigner_pdf(kind: str, s):
    """Wigner surmise density for ``kind`` in ``WIGNER_KINDS``."""
    amp, beta, scale = _check_kind(kind)
    s = np.asarray(s, dtype=float)
    return amp * s**beta * np.exp(-scale * s * s)


def wigner_cdf(kind: str, s):
    """Closed-form integrated surmise ``I(s)``.

    Uses the regularized lower incomplete gamma function, since
    ``int_0^s x^beta exp(-b x^2) dx = Gamma((beta+1)/2) P((beta+1)/2, b s^2) / (2 b^((beta+1)/2))``.
    """
    amp, beta, scale = _check_kind(kind)
    s = np.asarray(s, dtype=float)
    order = 0.5 * (beta + 1)
    total = amp * special.gamma(order) / (2.0 * scale**order)
    return total * special.gammainc(order, scale * s * s)


def khat1(t):
    """``t K1(t)`` with the finite limit 1 at ``t = 0``.

    Below ``t = 1e-6`` the leading series ``1 + (t^2 / 2) log(t / 2)`` is used.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = t < _KHAT_SERIES_CUTOFF
    # below 1e-150 the correction is beneath double precision
    ts = np.maximum(t[small], 1e-150)
    out[small] = 1.0 + 0.5 * ts * ts * np.log(ts / 2.0)
    tl = t[~small]
    out[~small] = tl * special.k1(tl)
    return out


def coupling_density_pV(z):
    """Density of the squared Kramers coupling ``z = |V12|^2``.

    ``p_V(z) = (pi^3 / 4) sqrt(z) K1(pi sqrt(z)) = (pi^2 / 4) khat1(pi sqrt(z))``;
    finite at ``z = 0`` with value ``pi^2 / 4``.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("coupling_density_pV requires z >= 0")
    return 0.25 * math.pi**2 * khat1(math.pi * np.sqrt(z))


def coupling_cdf(z):
    """Cumulative distribution of ``p_V``: ``1 - t^2 K2(t) / 2`` with ``t = pi sqrt(z)``."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("coupling_cdf requires z >= 0")
    t = math.pi * np.sqrt(z)
    # K2 overflows near zero, where the leading term t^2 / 4 is exact to ~t^2 log t
    out = np.atleast_1d(0.25 * t * t)
    tt = np.atleast_1d(t)
    big = tt >= _KHAT_SERIES_CUTOFF
    out[big] = 1.0 - 0.5 * tt[big] ** 2 * special.kv(2, tt[big])
    return out.reshape(t.shape)


@lru_cache(maxsize=8)
def _phi_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.25 * math.pi
    return half * (x + 1.0), half * w


def single_pair_pdf_unscaled(s, nodes: int = DEFAULT_NODES):
    """Spacing law ``p0`` of a pair of conjugate blocks (mean ``s_bar``, not 1).

    Parameters
    ----------
    s : array_like
        Non-negative spacings.
    nodes : int
        Gauss-Legendre nodes on the angular interval ``[0, pi/2]``; at least 200.
    """
    if nodes < 200:
        raise ValueError("at least 200 quadrature nodes are required")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("spacings must be non-negative")
    phi, w = _phi_rule(nodes)
    sin_phi, cos2 = np.sin(phi), np.cos(phi) ** 2
    flat = s.reshape(-1, 1)
    integrand = (
        sin_phi * cos2
        * np.exp(-(4.0 / math.pi) * flat**2 * cos2)
        * khat1(math.pi * flat * sin_phi)
    )
    out = 16.0 * flat[:, 0] ** 4 * (integrand @ w)
    return out.reshape(s.shape)


def _moment(pdf, power: int) -> float:
    val, _ = integrate.quad(lambda x: x**power * float(pdf(x)), 0.0, S_MAX, limit=200, epsabs=1e-13, epsrel=1e-12)
    return val


@lru_cache(maxsize=8)
def single_pair_mean(nodes: int = DEFAULT_NODES) -> float:
    """Mean spacing ``s_bar`` of ``p0`` by adaptive quadrature on ``[0, S_MAX]``."""
    return _moment(lambda x: single_pair_pdf_unscaled(x, nodes), 1)


def single_pair_pdf(s, nodes: int = DEFAULT_NODES):
    """Single-pair spacing law rescaled to unit mean: ``s_bar p0(s_bar s)``."""
    s_bar = single_pair_mean(nodes)
    return s_bar * single_pair_pdf_unscaled(s_bar * np.asarray(s, dtype=float), nodes)


@dataclass(frozen=True)
class SpacingLaw:
    """A spacing density with unit mean, usable as a reference curve.

    ``kind`` is one of ``WIGNER_KINDS`` or ``"SinglePairBonds"``; ``quadrature``
    is the angular node count used by the single-pair law.
    """

    kind: str
    quadrature: int = DEFAULT_NODES

    def __post_init__(self):
        if self.kind not in WIGNER_KINDS and self.kind != "SinglePairBonds":
            raise ValueError(f"unknown spacing law {self.kind!r}")

    def pdf(self, s):
        if self.kind == "SinglePairBonds":
            return single_pair_pdf(s, self.quadrature)
        return wigner_pdf(self.kind, s)

    def cdf(self, s):
        """``I(s)``; closed form for surmises, cumulative quadrature otherwise."""
        if self.kind != "SinglePairBonds":
            return wigner_cdf(self.kind, s)
        return integrated_distribution(self.pdf, s)

    def mass(self) -> float:
        return _moment(self.pdf, 0)

    def mean(self) -> float:
        return _moment(self.pdf, 1)

    def bin_probabilities(self, edges) -> np.ndarray:
        """Probability mass of each histogram bin."""
        edges = np.asarray(edges, dtype=float)
        return np.diff(self.cdf(edges))


def integrated_distribution(source, s_grid) -> np.ndarray:
    """Integrated spacing distribution ``I(s)`` on ``s_grid``.

    ``source`` is either a callable density, integrated piecewise between
    consecutive grid points with 64-point Gauss-Legendre panels, or an array of
    empirical spacings, in which case the empirical CDF is returned.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if callable(source):
        order = np.argsort(s_grid)
        pts = np.concatenate([[0.0], s_grid[order]])
        x, w = np.polynomial.legendre.leggauss(64)
        lo, hi = pts[:-1, None], pts[1:, None]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes = mid + half * x
        panels = (np.asarray(source(nodes.ravel())).reshape(nodes.shape) * w).sum(axis=1) * half[:, 0]
        out = np.empty_like(s_grid)
        out[order] = np.cumsum(panels)
        return out
    sample = np.sort(np.asarray(source, dtype=float).ravel())
    if sample.size == 0:
        raise ValueError("empty spacing sample")
    return np.searchsorted(sample, s_grid, side="right") / sample.size


def loglog_slope(s, cumulative) -> float:
    """Least-squares slope of ``log I`` against ``log s``."""
    s = np.asarray(s, dtype=float)
    cumulative = np.asarray(cumulative, dtype=float)
    keep = (s > 0) & (cumulative > 0)
    if keep.sum() < 2:
        raise ValueError("need at least two positive points for a log-log slope")
    return float(np.polyfit(np.log(s[keep]), np.log(cumulative[keep]), 1)[0])


def export_theory_curves(out_dir: str | Path, s_max: float = 4.0, points: int = 401) -> list[Path]:
    """Write one ``(s, pdf, cdf)`` CSV per law into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    s = np.linspace(0.0, s_max, points)
    paths = []
    for kind in WIGNER_KINDS + ("SinglePairBonds",):
        law = SpacingLaw(kind)
        pdf, cdf = law.pdf(s), law.cdf(s)
        path = out_dir / f"theory_{kind}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["s", "pdf", "cdf"])
            for row in zip(s, pdf, cdf):
                writer.writerow([repr(float(v)) for v in row])
        paths.append(path)
    return paths
