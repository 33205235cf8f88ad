"""Secular matrix h(k) of a Neumann graph and its zeros.

The graph eigenvalues are the wavenumbers where ``det h(k) = 0``.  Between two
consecutive poles (``sin(k L_b) = 0`` for some bond) ``h(k)`` is Hermitian with
a positive semidefinite derivative, so each sorted eigenvalue branch is
non-decreasing in ``k``.  Roots are therefore located by watching individual
branches change sign on a grid and bisecting the branch, which also catches
Kramers doublets where the determinant touches zero without changing sign.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph_model import Graph, GraphError

__all__ = [
    "EPS_POLE",
    "PoleError",
    "NoEigenvaluesError",
    "SolverOptions",
    "Spectrum",
    "SymmetryReport",
    "assemble_h",
    "secular_batch",
    "write_spectrum_csv",
    "find_spectrum",
    "verify_symplectic_symmetry",
    "pole_positions",
]

log = logging.getLogger(__name__)

EPS_POLE = 1e-6
# batched eigen-solves are chunked to bound memory
_CHUNK = 4096


class PoleError(ValueError):
    """``k`` lies inside the guard band around a pole of h(k)."""

    def __init__(self, k: float, bond_index: int, distance: float):
        self.k = k
        self.bond_index = bond_index
        self.distance = distance
        super().__init__(
            f"k={k!r} is within {distance:.3g} of a pole of bond {bond_index}"
        )


class NoEigenvaluesError(RuntimeError):
    pass


def _bond_pole_distance(lengths: np.ndarray, k: float) -> np.ndarray:
    """Distance in k to the nearest pole m*pi/L of every bond."""
    period = np.pi / lengths
    r = np.remainder(k, period)
    return np.minimum(r, period - r)


def secular_batch(g: Graph, ks: np.ndarray) -> np.ndarray:
    """Secular matrices for an array of (possibly complex) wavenumbers.

    Returns an array of shape ``ks.shape + (n, n)``.  No pole checking is done.
    """
    ks = np.asarray(ks)
    n = g.vertex_count
    i, j, lengths, phases = g.arrays
    flat = ks.reshape(-1)
    kl = flat[:, None] * lengths[None, :]
    sin_kl = np.sin(kl)
    cot = np.cos(kl) / sin_kl
    dtype = np.result_type(flat.dtype, np.complex128)
    h = np.zeros((flat.size, n, n), dtype=dtype)
    diag = np.zeros((flat.size, n), dtype=dtype)
    # parallel bonds accumulate, hence np.add.at rather than fancy assignment
    np.add.at(diag.T, i, -cot.T)
    np.add.at(diag.T, j, -cot.T)
    h[:, np.arange(n), np.arange(n)] = diag
    fwd = np.exp(-1j * phases)[None, :] / sin_kl
    bwd = np.exp(1j * phases)[None, :] / sin_kl
    hv = h.transpose(1, 2, 0)
    np.add.at(hv, (i, j), fwd.T)
    np.add.at(hv, (j, i), bwd.T)
    return h.reshape(ks.shape + (n, n))


def assemble_h(g: Graph, k: complex, eps_pole: float = EPS_POLE, check: bool = True) -> np.ndarray:
    """Secular matrix h(k) of ``g``.

    ``h_ii = -sum cot(k L)`` over bonds at ``i`` and ``h_ij = sum exp(-i phi_ij) / sin(k L)``
    over bonds ``i -> j``.  For real ``k`` the result is Hermitian.

    Raises
    ------
    PoleError
        If real ``k`` lies within ``eps_pole`` of a pole.
    GraphError
        If the graph is not connected.
    """
    if check:
        if not g.is_connected():
            raise GraphError("graph is not connected")
        if np.isreal(k) and g.bonds:
            _, _, lengths, _ = g.arrays
            dist = _bond_pole_distance(lengths, float(np.real(k)))
            b = int(np.argmin(dist))
            if dist[b] < eps_pole:
                raise PoleError(float(np.real(k)), b, float(dist[b]))
    h = secular_batch(g, np.asarray([k]))[0]
    if np.isreal(k):
        # exact Hermiticity; diagonal of a real-k matrix is real
        h = 0.5 * (h + h.conj().T)
    return h


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of :func:`find_spectrum`.

    ``grid_step`` defaults to ``0.05 * pi / L``; ``tol`` is relative in ``k``;
    ``degeneracy_tol`` is in units of the mean spacing ``pi / L``.
    """

    grid_step: float | None = None
    tol: float = 1e-10
    degeneracy_tol: float = 1e-8
    eps_pole: float = EPS_POLE
    workers: int = 1
    weyl_tolerance: float = 0.10


@dataclass
class Spectrum:
    values: np.ndarray
    multiplicities: np.ndarray
    k_range: tuple[float, float]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.multiplicities = np.asarray(self.multiplicities, dtype=int)
        if self.values.shape != self.multiplicities.shape:
            raise ValueError("values and multiplicities differ in length")
        if self.values.size > 1 and np.any(np.diff(self.values) <= 0):
            raise ValueError("spectrum values must be strictly increasing")

    def __len__(self) -> int:
        return self.values.size

    @property
    def count(self) -> int:
        """Number of levels counted with multiplicity."""
        return int(self.multiplicities.sum())

    def expanded(self) -> np.ndarray:
        """Every level repeated according to its multiplicity."""
        return np.repeat(self.values, self.multiplicities)


def pole_positions(g: Graph, k_min: float, k_max: float) -> np.ndarray:
    """Sorted unique poles ``m pi / L_b`` inside ``[k_min, k_max]``."""
    _, _, lengths, _ = g.arrays
    poles = []
    for length in np.unique(lengths):
        m0 = math.ceil(k_min * length / math.pi)
        m1 = math.floor(k_max * length / math.pi)
        if m1 >= m0:
            poles.append(np.arange(m0, m1 + 1) * math.pi / length)
    if not poles:
        return np.empty(0)
    return np.unique(np.concatenate(poles))


def _pole_free_intervals(g: Graph, k_min: float, k_max: float, eps: float) -> list[tuple[float, float]]:
    poles = pole_positions(g, k_min - eps, k_max + eps)
    edges = np.concatenate(([k_min - eps], poles, [k_max + eps]))
    intervals = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        a = max(lo + eps, k_min)
        b = min(hi - eps, k_max)
        if b > a:
            intervals.append((a, b))
    return intervals


def _eigvalsh_batch(g: Graph, ks: np.ndarray) -> np.ndarray:
    out = np.empty((ks.size, g.vertex_count))
    for start in range(0, ks.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[sl] = np.linalg.eigvalsh(secular_batch(g, ks[sl]))
    return out


def _roots_in_intervals(g: Graph, intervals: list[tuple[float, float]], grid_origin: float,
                        step: float, tol: float, abs_tol: float = 0.0) -> np.ndarray:
    """All branch zero crossings inside the given pole-free intervals."""
    if not intervals:
        return np.empty(0)
    pts = []
    owner = []
    for idx, (a, b) in enumerate(intervals):
        # the global grid keeps results independent of how intervals are chunked
        m0 = math.floor((a - grid_origin) / step) + 1
        m1 = math.ceil((b - grid_origin) / step) - 1
        inner = grid_origin + step * np.arange(m0, m1 + 1) if m1 >= m0 else np.empty(0)
        inner = inner[(inner > a) & (inner < b)]
        seg = np.concatenate(([a], inner, [b]))
        pts.append(seg)
        owner.append(np.full(seg.size, idx))
    ks = np.concatenate(pts)
    owner = np.concatenate(owner)
    lam = _eigvalsh_batch(g, ks)

    same = owner[:-1] == owner[1:]
    crossing = (lam[:-1] < 0) & (lam[1:] >= 0) & same[:, None]
    left_idx, branch = np.nonzero(crossing)
    if left_idx.size == 0:
        return np.empty(0)
    lo = ks[left_idx].copy()
    hi = ks[left_idx + 1].copy()
    width = tol * np.maximum(np.abs(hi), 1.0)
    if abs_tol > 0:
        width = np.minimum(width, abs_tol)
    # never ask for more than floating point can resolve
    width = np.maximum(width, 4.0 * np.spacing(hi))
    # each root stops on its own width so chunking cannot change the result
    active = np.nonzero(hi - lo > width)[0]
    while active.size:
        mid = 0.5 * (lo[active] + hi[active])
        neg = _eigvalsh_batch(g, mid)[np.arange(active.size), branch[active]] < 0
        lo[active] = np.where(neg, mid, lo[active])
        hi[active] = np.where(neg, hi[active], mid)
        active = active[hi[active] - lo[active] > width[active]]
    return 0.5 * (lo + hi)


def _roots_worker(args):
    return _roots_in_intervals(*args)


def find_spectrum(g: Graph, k_range: tuple[float, float], opts: SolverOptions | None = None) -> Spectrum:
    """Zeros of ``det h(k)`` inside ``k_range`` with multiplicities.

    Parameters
    ----------
    g : Graph
        Connected graph without self-loops.
    k_range : (float, float)
        Positive, non-empty wavenumber window.
    opts : SolverOptions, optional

    Returns
    -------
    Spectrum
        Levels closer than ``opts.degeneracy_tol`` mean spacings are merged
        into one value with multiplicity equal to the number of branches.
        ``metadata`` holds the grid step, tolerance, Weyl count check and the
        largest merged split.

    Raises
    ------
    NoEigenvaluesError
        If no level is found.
    """
    opts = opts or SolverOptions()
    k_min, k_max = map(float, k_range)
    if not 0 < k_min < k_max:
        raise ValueError("k_range must be positive and non-empty")
    if not g.is_connected():
        raise GraphError("graph is not connected")
    total = g.total_length
    mean_spacing = math.pi / total
    step = opts.grid_step if opts.grid_step is not None else 0.05 * mean_spacing

    intervals = _pole_free_intervals(g, k_min, k_max, opts.eps_pole)
    merge_tol = opts.degeneracy_tol * mean_spacing
    # branches of a doublet must end well inside the merge window
    abs_tol = 0.1 * merge_tol
    if opts.workers > 1 and len(intervals) > opts.workers:
        chunks = np.array_split(np.arange(len(intervals)), opts.workers)
        jobs = [(g, [intervals[c] for c in chunk], k_min, step, opts.tol, abs_tol) for chunk in chunks]
        with ProcessPoolExecutor(max_workers=opts.workers) as pool:
            parts = list(pool.map(_roots_worker, jobs))
        roots = np.concatenate(parts)
    else:
        roots = _roots_in_intervals(g, intervals, k_min, step, opts.tol, abs_tol)
    roots = np.sort(roots)

    if roots.size == 0:
        raise NoEigenvaluesError(f"no eigenvalues in [{k_min}, {k_max}]")

    values, mults, max_split = [], [], 0.0
    start = 0
    for idx in range(1, roots.size + 1):
        if idx == roots.size or roots[idx] - roots[idx - 1] > merge_tol:
            group = roots[start:idx]
            values.append(float(group.mean()))
            mults.append(group.size)
            if group.size > 1:
                max_split = max(max_split, float(group[-1] - group[0]))
            start = idx

    count = int(np.sum(mults))
    expected = (k_max - k_min) / mean_spacing
    weyl_ok = abs(count - expected) <= opts.weyl_tolerance * max(expected, 1.0)
    if not weyl_ok:
        log.warning(
            "Weyl count mismatch: found %d levels, expected %.1f; grid may be too coarse",
            count, expected,
        )
    meta = {
        "grid_step": step,
        "tol": opts.tol,
        "degeneracy_tol": opts.degeneracy_tol,
        "eps_pole": opts.eps_pole,
        "total_length": total,
        "mean_spacing": mean_spacing,
        "weyl_expected": expected,
        "count": count,
        "weyl_ok": bool(weyl_ok),
        "max_doublet_split": max_split,
        "pole_free_intervals": len(intervals),
    }
    return Spectrum(np.array(values), np.array(mults), (k_min, k_max), meta)


@dataclass(frozen=True)
class SymmetryReport:
    """Commutator residuals of h(k) with the two candidate antiunitary symmetries.

    ``symplectic_residual`` uses ``T = diag(C tau_y, ...)`` in the interleaved
    ordering (``T^2 = -1``); ``orthogonal_residual`` uses complex conjugation
    composed with the swap of the two subgraphs (``T^2 = +1``).
    """

    symplectic_residual: float
    orthogonal_residual: float
    t_squared_symplectic: int
    t_squared_orthogonal: int

    @property
    def verdict(self) -> str:
        if self.symplectic_residual < 1e-10:
            return "symplectic"
        if self.orthogonal_residual < 1e-10:
            return "orthogonal"
        return "none"


def _symmetry_operators(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unitary parts ``U`` of ``T = U C`` for a pair graph on ``2 n`` vertices."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    # tau_y = [[0, -1], [1, 0]] acting on (v, v') for every vertex v
    u_sym = np.block([[zero, -eye], [eye, zero]])
    u_orth = np.block([[zero, eye], [eye, zero]])
    return u_sym, u_orth


def verify_symplectic_symmetry(g: Graph, k_samples) -> SymmetryReport:
    """Check whether ``h(k)`` commutes with the pair-graph antiunitary symmetries.

    ``T = U C`` commutes with ``h`` iff ``h U = U h*``; the reported residual is
    ``max_k ||h U - U h*||_F / ||h||_F``.
    """
    if g.vertex_count % 2:
        raise GraphError("symmetry check needs an even number of vertices")
    n = g.vertex_count // 2
    u_sym, u_orth = _symmetry_operators(n)
    res_sym = res_orth = 0.0
    for k in k_samples:
        h = assemble_h(g, float(k))
        norm = np.linalg.norm(h)
        res_sym = max(res_sym, float(np.linalg.norm(h @ u_sym - u_sym @ h.conj()) / norm))
        res_orth = max(res_orth, float(np.linalg.norm(h @ u_orth - u_orth @ h.conj()) / norm))
    t2_sym = int(round(np.real(np.trace(u_sym @ u_sym.conj())) / (2 * n)))
    t2_orth = int(round(np.real(np.trace(u_orth @ u_orth.conj())) / (2 * n)))
    return SymmetryReport(res_sym, res_orth, t2_sym, t2_orth)


def write_spectrum_csv(spectrum: Spectrum, path, diagnostics: bool = True):
    """Write ``index, k, multiplicity`` rows; diagnostics go to ``<path>.json``."""
    from pathlib import Path

    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "k", "multiplicity"])
        for idx, (k, m) in enumerate(zip(spectrum.values, spectrum.multiplicities)):
            writer.writerow([idx, repr(float(k)), int(m)])
    if diagnostics:
        meta = {key: (val.item() if hasattr(val, "item") else val) for key, val in spectrum.metadata.items()}
        meta["k_range"] = list(spectrum.k_range)
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path
