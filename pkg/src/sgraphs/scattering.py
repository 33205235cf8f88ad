"""Scattering matrix of a graph with attached leads, reflection phases and maps.

With leads attached at the vertices of a :class:`PortSet`, the scattering
matrix at (possibly absorbing) wavenumber ``k + i eta`` is

    S = -(1 - i K)(1 + i K)^-1,   K = W^T h(k + i eta)^-1 W,

where ``W`` selects the port vertices.  For ``eta = 0`` it is unitary and the
single-port reflection phase is ``alpha = pi - 2 arctan G_00``.  Between poles
``G_00`` decreases, so ``alpha`` grows by ``2 pi`` across every level that
couples to the port; a Kramers doublet counts once.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph_model import Graph, GraphError, SymplecticPairSpec, build_symplectic_pair
from .secular import Spectrum, secular_batch

__all__ = [
    "DEFAULT_ETA",
    "PortSet",
    "SMatrixSample",
    "PhaseSamples",
    "TransmissionMap",
    "ExtractionError",
    "s_matrix",
    "s_matrix_batch",
    "reflection_phase_spectrum",
    "extract_spectrum_from_phase",
    "match_levels",
    "transmission_map",
    "remap_to_phase",
]

log = logging.getLogger(__name__)

DEFAULT_ETA = 1e-4
_BATCH = 2048


class ExtractionError(ValueError):
    """Phase samples that cannot be turned into a spectrum."""


@dataclass(frozen=True)
class PortSet:
    """Ordered channel list; channel ``l`` couples with unit weight to vertex ``ports[l]``."""

    ports: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ports", tuple(int(p) for p in self.ports))
        if not self.ports:
            raise GraphError("at least one port is required")
        if len(set(self.ports)) != len(self.ports):
            raise GraphError("port vertices must be distinct")

    def __len__(self) -> int:
        return len(self.ports)

    def check(self, g: Graph) -> None:
        for p in self.ports:
            if not 0 <= p < g.vertex_count:
                raise GraphError(f"port vertex {p} is outside the graph")

    def coupling(self, vertex_count: int) -> np.ndarray:
        """The ``vertex_count x channels`` matrix ``W``."""
        w = np.zeros((vertex_count, len(self.ports)))
        w[list(self.ports), np.arange(len(self.ports))] = 1.0
        return w


@dataclass(frozen=True)
class SMatrixSample:
    k: float
    entries: np.ndarray
    absorption: float = 0.0

    def unitarity_defect(self) -> float:
        s = self.entries
        return float(np.linalg.norm(s.conj().T @ s - np.eye(s.shape[0])))


def s_matrix_batch(g: Graph, ports: PortSet, ks, eta: float = 0.0) -> np.ndarray:
    """Scattering matrices for many real ``ks``; shape ``(len(ks), L, L)``."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    ports.check(g)
    ks = np.asarray(ks, dtype=float).ravel()
    w = ports.coupling(g.vertex_count)
    eye = np.eye(len(ports))
    out = np.empty((ks.size, len(ports), len(ports)), dtype=complex)
    for start in range(0, ks.size, _BATCH):
        chunk = ks[start:start + _BATCH] + 1j * eta
        h = secular_batch(g, chunk)
        green = np.linalg.solve(h, np.broadcast_to(w, (chunk.size,) + w.shape))
        k_mat = green[:, list(ports.ports), :]
        out[start:start + chunk.size] = -np.linalg.solve((eye + 1j * k_mat).transpose(0, 2, 1),
                                                          (eye - 1j * k_mat).transpose(0, 2, 1)).transpose(0, 2, 1)
    return out


def s_matrix(g: Graph, ports: PortSet, k: float, eta: float = 0.0) -> SMatrixSample:
    """Scattering matrix at a single wavenumber.

    Raises
    ------
    numpy.linalg.LinAlgError
        If ``h(k + i eta)`` is singular; move ``k`` slightly.
    """
    s = s_matrix_batch(g, ports, [k], eta)[0]
    if not np.all(np.isfinite(s)):
        raise np.linalg.LinAlgError(f"secular matrix is singular at k={k}")
    return SMatrixSample(float(k), s, float(eta))


@dataclass
class PhaseSamples:
    """Unwrapped reflection phase on a wavenumber grid.

    ``suspicious`` marks steps whose wrapped increment exceeded
    ``max_step``, i.e. where the grid may be too coarse to unwrap reliably.
    """

    k: np.ndarray
    alpha: np.ndarray
    eta: float = 0.0
    suspicious: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __len__(self) -> int:
        return self.k.size

    def windings(self) -> int:
        """Net number of ``2 pi`` turns between the first and last sample."""
        return int(round((self.alpha[-1] - self.alpha[0]) / (2.0 * math.pi)))


def reflection_phase_spectrum(g: Graph, port: int, k_grid, eta: float = DEFAULT_ETA,
                              cable_length: float = 0.0, cable_offset: float = 0.0,
                              max_step: float = 0.9 * math.pi, strict: bool = False) -> PhaseSamples:
    """Unwrapped phase of ``S_00`` for a single lead at ``port``.

    ``cable_length`` and ``cable_offset`` emulate a feed line: they add
    ``cable_offset - 2 k cable_length`` to the phase, i.e. a constant and a
    linear drift.  With ``strict`` a step above ``max_step`` raises instead of
    being flagged.
    """
    k = np.asarray(k_grid, dtype=float)
    if k.ndim != 1 or k.size < 2 or np.any(np.diff(k) <= 0):
        raise ValueError("k_grid must be strictly increasing with at least two points")
    s00 = s_matrix_batch(g, PortSet((port,)), k, eta)[:, 0, 0]
    steps = np.angle(s00[1:] / s00[:-1])
    suspicious = np.abs(steps) > max_step
    if suspicious.any():
        msg = f"{int(suspicious.sum())} phase steps exceed {max_step:.3g}; refine the k grid"
        if strict:
            raise ValueError(msg)
        log.warning(msg)
    alpha = np.angle(s00[0]) + np.concatenate([[0.0], np.cumsum(steps)])
    alpha = alpha + cable_offset - 2.0 * k * cable_length
    return PhaseSamples(k, alpha, float(eta), suspicious)


def extract_spectrum_from_phase(samples: PhaseSamples, discriminator: float = 0.0,
                                split_overlaps: bool = True) -> Spectrum:
    """Locate resonances as peaks of the squared phase derivative.

    The phase is detrended by a least-squares line, differentiated by central
    differences and squared.  Local maxima above ``discriminator`` times the
    largest value are kept and refined by a parabola through the three
    samples around each maximum.

    Detrending makes the derivative negative between resonances, and a
    strongly coupled resonance can stay below the mean slope, so squaring
    alone both invents peaks between levels and hides broad ones.  Peaks are
    therefore taken as maxima of the signed derivative, oriented by the
    tallest excursion; the threshold still applies to the squared value.

    With ``split_overlaps`` every interior stretch between two derivative
    minima is checked for its phase winding.  A stretch winding by ``m >= 2``
    turns holds ``m`` overlapping resonances, which are placed where the
    phase crosses ``(j - 1/2) / m`` of its rise.
    """
    if samples is None or len(samples) < 3:
        raise ExtractionError("at least three phase samples are required")
    if discriminator < 0:
        raise ExtractionError("discriminator must be non-negative")
    k, alpha = samples.k, samples.alpha
    slope, intercept = np.polyfit(k, alpha, 1)
    flat = alpha - (slope * k + intercept)
    deriv = np.gradient(flat, k)
    deriv2 = deriv**2
    # the tallest excursion is always a resonance, whatever the feed-line drift
    direction = np.sign(deriv[np.argmax(deriv2)]) or 1.0
    signed = direction * deriv
    inner = np.arange(1, k.size - 1)
    is_peak = (signed[inner] > signed[inner - 1]) & (signed[inner] >= signed[inner + 1])
    is_peak &= deriv2[inner] >= discriminator * deriv2.max()
    idx = inner[is_peak]
    if idx.size == 0:
        raise ExtractionError("no peaks above the discriminator")
    x0, x1, x2 = k[idx - 1], k[idx], k[idx + 1]
    y0, y1, y2 = signed[idx - 1], signed[idx], signed[idx + 1]
    # vertex of the parabola through three (possibly unevenly spaced) points
    num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(den != 0, 0.5 * num / den, 0.0)
    peaks = np.clip(x1 - shift, x0, x2)
    split = 0
    if split_overlaps and idx.size >= 3:
        peaks, split = _split_by_winding(k, direction * alpha, signed, idx, peaks)
    peaks = np.unique(peaks)
    return Spectrum(peaks, np.ones(peaks.size, dtype=int), (float(k[0]), float(k[-1])),
                    {"method": "phase_derivative", "discriminator": discriminator,
                     "drift": float(slope), "eta": samples.eta, "split_overlaps": split})


def _split_by_winding(k, phase, signed, idx, peaks):
    """Replace peaks whose surrounding stretch winds several times."""
    bounds = [idx[i] + int(np.argmin(signed[idx[i]:idx[i + 1] + 1])) for i in range(idx.size - 1)]
    out, added = [peaks[0]], 0
    for i in range(1, idx.size - 1):
        lo, hi = bounds[i - 1], bounds[i]
        turns = int(round((phase[hi] - phase[lo]) / (2.0 * math.pi)))
        if turns < 2:
            out.append(peaks[i])
            continue
        seg_k, seg_phase = k[lo:hi + 1], np.maximum.accumulate(phase[lo:hi + 1])
        targets = seg_phase[0] + (np.arange(turns) + 0.5) * (seg_phase[-1] - seg_phase[0]) / turns
        out.extend(np.interp(targets, seg_phase, seg_k))
        added += turns - 1
    out.append(peaks[-1])
    return np.array(out), added


def match_levels(reference, found, tolerance: float) -> tuple[float, np.ndarray]:
    """One-to-one nearest matching of ``found`` against ``reference``.

    Returns the recall (fraction of reference levels with a partner within
    ``tolerance``) and the signed offsets of matched pairs.  Pairs are
    accepted greedily in order of increasing distance.
    """
    ref = np.asarray(reference, dtype=float)
    got = np.asarray(found, dtype=float)
    if ref.size == 0:
        raise ValueError("empty reference spectrum")
    if got.size == 0:
        return 0.0, np.zeros(0)
    pos = np.clip(np.searchsorted(got, ref), 1, max(got.size - 1, 1))
    cand = []
    for r, p in enumerate(pos):
        for j in (p - 1, p):
            if 0 <= j < got.size:
                d = got[j] - ref[r]
                if abs(d) <= tolerance:
                    cand.append((abs(d), r, j, d))
    cand.sort()
    used_r, used_f, offsets = set(), set(), []
    for _, r, j, d in cand:
        if r in used_r or j in used_f:
            continue
        used_r.add(r)
        used_f.add(j)
        offsets.append(d)
    return len(used_r) / ref.size, np.array(offsets)


@dataclass
class TransmissionMap:
    """``|S_01|^2`` on a rectangular grid.

    ``rows`` holds the length offsets (or phases after remapping), ``k`` the
    wavenumbers; missing cells are NaN.
    """

    rows: np.ndarray
    k: np.ndarray
    values: np.ndarray
    row_name: str = "delta_l"
    delta_phi: float = 0.0

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([self.row_name, "k", "value"])
            for r, row in zip(self.rows, self.values):
                for kk, v in zip(self.k, row):
                    writer.writerow([repr(float(r)), repr(float(kk)), "" if np.isnan(v) else repr(float(v))])
        return path

    def to_grid_text(self, path: str | Path) -> Path:
        """Whitespace table: first line the k values, then one row per map row."""
        path = Path(path)
        with path.open("w") as fh:
            fh.write(f"# {self.row_name} \\ k\n")
            fh.write("nan " + " ".join(f"{kk:.10g}" for kk in self.k) + "\n")
            for r, row in zip(self.rows, self.values):
                fh.write(f"{r:.10g} " + " ".join(f"{v:.6e}" for v in row) + "\n")
        return path


def transmission_map(spec: SymplecticPairSpec, ports: PortSet, delta_l_grid, k_grid,
                     eta: float = DEFAULT_ETA, twist: str = "length",
                     normalize: bool = False) -> TransmissionMap:
    """Transmission ``|S_01|^2`` between the first two ports for a family of pair graphs.

    With ``twist="length"`` each row lengthens the twisted bond of the first
    connection by ``delta_l`` (``spec.delta_phi`` stays as a fixed extra
    phase); with ``twist="phase"`` the row value is added to the twist phase
    of every connection instead and lengths are unchanged.
    """
    if len(ports) < 2:
        raise GraphError("a transmission map needs two ports")
    rows = np.asarray(delta_l_grid, dtype=float)
    k = np.asarray(k_grid, dtype=float)
    values = np.empty((rows.size, k.size))
    count = len(spec.connections)
    for r, val in enumerate(rows):
        if twist == "length":
            extra = [float(val)] + [0.0] * (count - 1)
            g = build_symplectic_pair(spec, extra)
        elif twist == "phase":
            g = build_symplectic_pair(replace(spec, delta_phi=spec.delta_phi + float(val)))
        else:
            raise ValueError(f"unknown twist mode {twist!r}")
        if normalize:
            from .graph_model import normalize_to_unit_density
            g = normalize_to_unit_density(g)
        s = s_matrix_batch(g, ports, k, eta)
        values[r] = np.abs(s[:, 0, 1]) ** 2
    name = "delta_l" if twist == "length" else "delta_phi"
    return TransmissionMap(rows, k, values, name, spec.delta_phi)


def remap_to_phase(tmap: TransmissionMap, phi_edges) -> TransmissionMap:
    """Re-bin a length map onto constant twist phase ``delta_phi + k * delta_l``.

    Every sample is assigned to the phase bin containing its phase; a cell is
    the mean of its samples or NaN when no ``(delta_l, k)`` reaches it.
    """
    if tmap.row_name != "delta_l":
        raise ValueError("only length maps can be remapped")
    edges = np.asarray(phi_edges, dtype=float)
    phase = tmap.delta_phi + tmap.rows[:, None] * tmap.k[None, :]
    idx = np.digitize(phase, edges) - 1
    nb = edges.size - 1
    sums = np.zeros((nb, tmap.k.size))
    counts = np.zeros((nb, tmap.k.size))
    cols = np.broadcast_to(np.arange(tmap.k.size), phase.shape)
    ok = (idx >= 0) & (idx < nb)
    np.add.at(sums, (idx[ok], cols[ok]), tmap.values[ok])
    np.add.at(counts, (idx[ok], cols[ok]), 1.0)
    with np.errstate(invalid="ignore"):
        values = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return TransmissionMap(0.5 * (edges[:-1] + edges[1:]), tmap.k, values, "delta_phi", tmap.delta_phi)
