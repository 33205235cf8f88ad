"""Gaussian random-matrix ensembles and the coupled conjugate-block ensemble.

Normalization conventions (all spectra are unfolded before statistics, so
these only fix the overall energy scale):

* GOE: ``H = (A + A^T) / 2`` with real standard normal ``A``; off-diagonal
  variance 1/2, diagonal variance 1.
* GUE: ``H = (A + A^H) / 2`` with ``A = (X + iY) / sqrt(2)``; ``E|H_ij|^2 = 1/2``.
* GSE: the ``2n x 2n`` quaternion-real matrix ``[[A, B], [-B*, A*]]`` with
  ``A`` drawn from GUE(n) and ``B`` complex antisymmetric with the same
  off-diagonal variance.  Every eigenvalue is exactly doubly degenerate.
* CoupledBlock: ``[[H0, V], [V^H, H0*]]`` where ``H0`` is GUE(n) scaled to unit
  mean spacing at the band centre (``E|H0_ij|^2 = n / pi^2``) and
  ``V = c (psi1 psi2^T - psi2 psi1^T)`` with complex Gaussian vectors of density
  ``exp(-pi |psi|^2)`` per component and coupling scale ``c``.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

__all__ = [
    "ENSEMBLE_KINDS",
    "EnsembleSpec",
    "realization_rng",
    "sample_matrix",
    "sample",
    "ensemble_eigenvalues",
    "doublet_centres",
    "central_fraction",
    "write_eigenvalues_csv",
    "kramers_coupling_samples",
]

ENSEMBLE_KINDS = ("GOE", "GUE", "GSE", "CoupledBlock")


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble description.

    Parameters
    ----------
    kind : {"GOE", "GUE", "GSE", "CoupledBlock"}
    dim : int
        Full matrix dimension; even for GSE, ``2 * sub_dim`` for CoupledBlock.
    realizations : int
    seed : int
    sub_dim : int, optional
        Block size ``n`` of CoupledBlock; defaults to ``dim // 2``.
    coupling_scale : float
        Multiplier of the inter-block coupling (CoupledBlock only).
    """

    kind: str
    dim: int
    realizations: int = 1
    seed: int = 0
    sub_dim: int | None = None
    coupling_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        if self.realizations < 1:
            raise ValueError("realizations must be positive")
        if self.kind == "GSE" and self.dim % 2:
            raise ValueError("GSE requires an even dimension")
        if self.kind == "CoupledBlock":
            n = self.sub_dim if self.sub_dim is not None else self.dim // 2
            if 2 * n != self.dim:
                raise ValueError("CoupledBlock requires dim == 2 * sub_dim")
            object.__setattr__(self, "sub_dim", n)
            if self.coupling_scale < 0:
                raise ValueError("coupling_scale must be non-negative")

    @property
    def degenerate(self) -> bool:
        """Whether every eigenvalue comes as an exact Kramers doublet."""
        return self.kind in ("GSE", "CoupledBlock")


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for realization ``index`` of an ensemble with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def _complex_normal(rng, shape, variance: float = 1.0) -> np.ndarray:
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _gue(rng, n: int) -> np.ndarray:
    a = _complex_normal(rng, (n, n))
    return 0.5 * (a + a.conj().T)


def sample_matrix(spec: EnsembleSpec, index: int) -> np.ndarray:
    """Draw realization ``index`` of ``spec``; deterministic in ``(seed, index)``."""
    rng = realization_rng(spec.seed, index)
    n = spec.dim
    if spec.kind == "GOE":
        a = rng.standard_normal((n, n))
        return 0.5 * (a + a.T)
    if spec.kind == "GUE":
        return _gue(rng, n)
    if spec.kind == "GSE":
        m = n // 2
        a = _gue(rng, m)
        b = _complex_normal(rng, (m, m), 0.5)
        b = (b - b.T) / math.sqrt(2.0)
        return np.block([[a, b], [-b.conj(), a.conj()]])
    # CoupledBlock
    m = spec.sub_dim
    h0 = _gue(rng, m) * (math.sqrt(2.0 * m) / math.pi)
    # per-component density exp(-pi |psi|^2), i.e. E|psi|^2 = 1 / pi
    psi = _complex_normal(rng, (2, m), 1.0 / math.pi)
    v = spec.coupling_scale * (np.outer(psi[0], psi[1]) - np.outer(psi[1], psi[0]))
    return np.block([[h0, v], [v.conj().T, h0.conj()]])


def sample(spec: EnsembleSpec) -> Iterator[np.ndarray]:
    """Stream the realizations of ``spec`` one matrix at a time."""
    for index in range(spec.realizations):
        yield sample_matrix(spec, index)


def _eigvals_job(args) -> np.ndarray:
    spec, index = args
    return np.linalg.eigvalsh(sample_matrix(spec, index))


def ensemble_eigenvalues(spec: EnsembleSpec, workers: int = 1) -> list[np.ndarray]:
    """Sorted eigenvalues of every realization, independent of ``workers``."""
    jobs = [(spec, i) for i in range(spec.realizations)]
    if workers <= 1:
        return [_eigvals_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_eigvals_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def doublet_centres(values: np.ndarray) -> tuple[np.ndarray, float]:
    """Collapse sorted Kramers pairs to their mean; also return the largest intra-pair gap."""
    values = np.asarray(values, dtype=float)
    if values.size % 2:
        raise ValueError("an even number of eigenvalues is required")
    pairs = values.reshape(-1, 2)
    return pairs.mean(axis=1), float(np.max(pairs[:, 1] - pairs[:, 0], initial=0.0))


def central_fraction(values, fraction: float) -> np.ndarray:
    """Middle ``ceil(fraction * N)`` values of a sorted array, by rank."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("empty spectrum")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    count = min(values.size, math.ceil(fraction * values.size - 1e-12))
    start = (values.size - count) // 2
    return values[start:start + count]


def kramers_coupling_samples(count: int, seed: int = 0, chunk: int = 1_000_000) -> np.ndarray:
    """Draws of ``z = 4 |psi11 psi22 - psi12 psi21|^2``.

    The four amplitudes are independent complex Gaussians with density
    ``exp(-pi |psi|^2)``, i.e. wave-function components of a graph scaled to
    unit mean spacing.  The result does not depend on ``chunk``.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    out = np.empty(count)
    for index, start in enumerate(range(0, count, chunk)):
        rng = realization_rng(seed, index)
        n = min(chunk, count - start)
        psi = _complex_normal(rng, (4, n), 1.0 / math.pi)
        out[start:start + n] = 4.0 * np.abs(psi[0] * psi[3] - psi[1] * psi[2]) ** 2
    return out


def write_eigenvalues_csv(spectra, path: str | Path) -> Path:
    """Long-format dump with columns ``realization, index, value``."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["realization", "index", "value"])
        for r, vals in enumerate(spectra):
            for i, v in enumerate(vals):
                writer.writerow([r, i, repr(float(v))])
    return path
