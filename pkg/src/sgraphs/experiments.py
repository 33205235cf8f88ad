"""Ensemble runners shared by the command line and the acceptance suite."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph_model import Graph, SymplecticPairSpec, build_symplectic_pair, normalize_to_unit_density, \
    perturb_lengths, random_pair_spec
from .rmt import EnsembleSpec, central_fraction, doublet_centres, ensemble_eigenvalues, sample_matrix
from .scattering import DEFAULT_ETA, extract_spectrum_from_phase, match_levels, reflection_phase_spectrum
from .secular import SolverOptions, Spectrum, find_spectrum
from .spacing_theory import SpacingLaw
from .spectral_stats import UnfoldedSpectrum, chi_square_gof, repulsion_slope, unfold, unfold_ensemble

__all__ = [
    "RECALL_TOLERANCE",
    "PairEnsemble",
    "SpacingSummary",
    "spacing_summary",
    "coupled_block_spacings",
    "gse_unfolded",
    "ExtractionResult",
    "phase_extraction",
    "perturbation_sweep",
]

# extracted level counts as found when within this fraction of the mean spacing
RECALL_TOLERANCE = 0.25


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class PairEnsemble:
    """Seeded family of cubic pair graphs normalized to unit level density.

    Graph ``i`` uses seed ``first_seed + i``; see
    :func:`sgraphs.graph_model.random_pair_spec`.
    """

    base_vertices: int = 8
    connections: int = 2
    delta_phi: float = math.pi
    graphs: int = 9
    first_seed: int = 0
    k_range: tuple[float, float] = (20.0, 1420.0)
    length_range: tuple[float, float] = (0.5, 1.5)
    phase_policy: str = "random_uniform"

    def spec(self, index: int) -> SymplecticPairSpec:
        return random_pair_spec(self.base_vertices, self.connections, self.delta_phi,
                                self.length_range, self.phase_policy, self.first_seed + index)

    def graph(self, index: int) -> Graph:
        return normalize_to_unit_density(build_symplectic_pair(self.spec(index)))

    def _solve(self, index: int) -> Spectrum:
        return find_spectrum(self.graph(index), self.k_range, SolverOptions())

    def spectra(self, workers: int = 1) -> list[Spectrum]:
        return _map(self._solve, list(range(self.graphs)), workers)

    def unfolded(self, workers: int = 1, doublet_mode: str = "resolved_pairs") -> list[UnfoldedSpectrum]:
        return [unfold(sp, doublet_mode=doublet_mode) for sp in self.spectra(workers)]


@dataclass(frozen=True)
class SpacingSummary:
    count: int
    mean: float
    chi2: float
    dof: int
    p_value: float
    slope: float | None
    slope_stderr: float | None
    slope_points: int
    reference: str

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def spacing_summary(spacings, reference: str = "WignerGSE", edges=None,
                    fit_range=(0.05, 0.3), min_points: int = 30) -> SpacingSummary:
    """Chi-square against ``reference`` plus the small-``s`` repulsion slope.

    The slope is fitted on ``fit_range`` in units of the sample mean spacing;
    it is ``None`` when fewer than ``min_points`` spacings fall inside.
    """
    s = np.asarray(spacings, dtype=float)
    mean = float(s.mean())
    law = SpacingLaw(reference)
    edges = np.arange(0.0, 3.0001, 0.1) if edges is None else np.asarray(edges)
    test = chi_square_gof(s / mean, law.cdf, edges)
    try:
        fit = repulsion_slope(s / mean, fit_range, min_points)
        slope, err, pts = fit.slope, fit.stderr, fit.points
    except ValueError:
        slope = err = None
        pts = int(np.sum((s / mean >= fit_range[0]) & (s / mean <= fit_range[1])))
    return SpacingSummary(s.size, mean, test.statistic, test.dof, test.p_value, slope, err, pts, reference)


def _doublet_window(args) -> np.ndarray:
    spec, index, fraction = args
    vals = np.linalg.eigvalsh(sample_matrix(spec, index))
    centres, _ = doublet_centres(vals)
    return np.diff(central_fraction(centres, fraction))


def coupled_block_spacings(sub_dim: int = 100, realizations: int = 2000, seed: int = 1,
                           fraction: float = 0.1, coupling_scale: float = 1.0, workers: int = 1) -> np.ndarray:
    """Doublet spacings from the centre of coupled conjugate-block matrices.

    Each realization keeps the central ``fraction`` of its doublets; the
    pooled spacings are divided by their mean.  Over the central tenth of the
    semicircle the density varies by well under one percent, so no further
    unfolding is applied.
    """
    spec = EnsembleSpec("CoupledBlock", 2 * sub_dim, realizations, seed, sub_dim, coupling_scale)
    parts = _map(_doublet_window, [(spec, i, fraction) for i in range(realizations)], workers)
    s = np.concatenate(parts)
    return s / s.mean()


def gse_unfolded(dim: int = 400, realizations: int = 500, seed: int = 1, fraction: float = 0.8,
                 workers: int = 1) -> list[UnfoldedSpectrum]:
    """GSE doublet spectra unfolded with a degree-5 fit of the pooled staircase."""
    spec = EnsembleSpec("GSE", dim, realizations, seed)
    centres = [doublet_centres(v)[0] for v in ensemble_eigenvalues(spec, workers)]
    return unfold_ensemble(centres, fraction, 5)


@dataclass
class ExtractionResult:
    reference: Spectrum
    extracted: Spectrum
    recall: float
    tolerance: float
    offsets: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)


def phase_extraction(g: Graph, port: int = 0, k_range=(1.0, 201.0), k_step: float = 2e-4,
                     eta: float = DEFAULT_ETA, discriminator: float = 0.0, split_overlaps: bool = True,
                     reference: Spectrum | None = None, tolerance: float | None = None) -> ExtractionResult:
    """Extract levels from the reflection phase and score them against the solver."""
    if reference is None:
        reference = find_spectrum(g, k_range)
    if tolerance is None:
        mean_spacing = (reference.values[-1] - reference.values[0]) / max(len(reference) - 1, 1)
        tolerance = RECALL_TOLERANCE * mean_spacing
    grid = np.arange(k_range[0], k_range[1], k_step)
    samples = reflection_phase_spectrum(g, port, grid, eta)
    found = extract_spectrum_from_phase(samples, discriminator, split_overlaps)
    recall, offsets = match_levels(reference.values, found.values, tolerance)
    return ExtractionResult(reference, found, recall, tolerance, offsets, samples.k, samples.alpha)


def perturbation_sweep(g: Graph, sigmas, seed: int = 0, **kwargs) -> list[tuple[float, float, int]]:
    """Recall against the clean spectrum for length-perturbed copies of ``g``.

    One perturbation direction (fixed ``seed``) is scaled by each ``sigma``.
    Returns ``(sigma, recall, peaks)`` triples.
    """
    k_range = kwargs.pop("k_range", (1.0, 201.0))
    reference = find_spectrum(g, k_range)
    out = []
    for sigma in sigmas:
        res = phase_extraction(perturb_lengths(g, float(sigma), seed), k_range=k_range,
                               reference=reference, **kwargs)
        out.append((float(sigma), res.recall, len(res.extracted)))
    return out
