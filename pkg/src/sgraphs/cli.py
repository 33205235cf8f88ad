"""Command line entry point: one subcommand per reproduced figure.

Usage::

    sgraphs <experiment> --config run.toml --out results/ [--seed N] [--threads N]
                         [--eta X] [--remap-phase]

Every run writes CSV artifacts plus ``manifest.json`` into ``--out``.  The exit
status is 0 only when all artifacts were written and the sanity checks of the
experiment passed; 2 signals a bad config, 1 a failed check or solver error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import experiments as ex
from .config import ConfigError, ExperimentConfig, load_config
from .curves import ObservableCurve
from .rmt import EnsembleSpec, doublet_centres, ensemble_eigenvalues
from .scattering import DEFAULT_ETA, PortSet, remap_to_phase, transmission_map
from .secular import SolverOptions, find_spectrum, verify_symplectic_symmetry, write_spectrum_csv
from .spacing_theory import SpacingLaw, coupling_cdf, coupling_density_pV, export_theory_curves, \
    integrated_distribution
from .spectral_stats import (delta3_from_sigma2, form_factor, gse_form_factor, gse_number_variance,
                             gse_rigidity, nn_spacing_histogram, number_variance, pooled_spacings,
                             spectral_rigidity, two_point_correlation, unfold_ensemble)

log = logging.getLogger("sgraphs")

EXPERIMENTS = ("spectrum", "kramers", "transmission_map", "phase_extraction", "spacing_gse",
               "coupled_block_sim", "stats_suite", "gse_goe_sweep", "theory_curves")
HELP = {
    "spectrum": "eigenvalues of a closed graph",
    "kramers": "doublet structure of a symplectic pair",
    "transmission_map": "|S|^2 between two ports over k and a length offset",
    "phase_extraction": "levels from the reflection phase, with perturbation sweep",
    "spacing_gse": "spacing statistics of a pair-graph ensemble",
    "coupled_block_sim": "doublet spacings of coupled conjugate blocks",
    "stats_suite": "form factor, number variance and rigidity",
    "gse_goe_sweep": "repulsion slopes across twist phases",
    "theory_curves": "closed-form reference curves (no config)",
}
STOCHASTIC = {"coupled_block_sim", "stats_suite", "spacing_gse", "gse_goe_sweep"}
# unfolded spectra must have a mean spacing within this of one
UNFOLD_TOLERANCE = 0.05


class Run:
    """Collects artifacts and named sanity checks of one experiment."""

    def __init__(self, cfg: ExperimentConfig, args, out: Path):
        self.cfg, self.args, self.out = cfg, args, out
        self.artifacts: list[str] = []
        self.checks: dict[str, bool] = {}
        self.results: dict = {}

    @property
    def seed(self) -> int:
        return self.args.seed if self.args.seed is not None else self.cfg.seed

    @property
    def eta(self) -> float:
        if self.args.eta is not None:
            return self.args.eta
        return float(self.cfg.get("scattering", "eta", DEFAULT_ETA))

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name

    def check(self, name: str, ok) -> None:
        self.checks[name] = bool(ok)
        if not ok:
            log.error("check failed: %s", name)


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _k_range(cfg: ExperimentConfig, table: str, default) -> tuple[float, float]:
    return (float(cfg.get(table, "k_min", default[0])), float(cfg.get(table, "k_max", default[1])))


def _solver_options(cfg: ExperimentConfig, workers: int) -> SolverOptions:
    s = cfg.table("solver")
    s.pop("k_min", None)
    s.pop("k_max", None)
    return SolverOptions(workers=workers, **s)


def _pair_ensemble(cfg: ExperimentConfig, seed: int, delta_phi: float) -> ex.PairEnsemble:
    ge = cfg.table("graph_ensemble")
    return ex.PairEnsemble(
        base_vertices=ge.get("base_vertices", 8), connections=ge.get("connections", 2),
        delta_phi=delta_phi, graphs=ge.get("graphs", 9), first_seed=ge.get("first_seed", seed),
        k_range=_k_range(cfg, "graph_ensemble", (20.0, 1420.0)),
        length_range=tuple(ge.get("length_range", (0.5, 1.5))),
        phase_policy=ge.get("phase_policy", "random_uniform"),
    )


def _phases(cfg: ExperimentConfig, default) -> list[float]:
    raw = cfg.get("graph_ensemble", "delta_phi_over_pi", default)
    return [float(v) for v in (raw if isinstance(raw, list) else [raw])]


def _spacing_edges(cfg: ExperimentConfig) -> np.ndarray:
    width = float(cfg.get("stats", "bin_width", 0.1))
    return np.arange(0.0, float(cfg.get("stats", "s_max", 3.0)) + 0.5 * width, width)


def _write_spacing_outputs(run: Run, s: np.ndarray, prefix: str, references) -> dict:
    """Histogram, integrated distribution and summaries of unit-mean spacings."""
    edges = _spacing_edges(run.cfg)
    fit_range = tuple(run.cfg.get("stats", "fit_range", (0.05, 0.3)))
    nn_spacing_histogram(s, edges).to_csv(run.path(f"{prefix}histogram.csv"), "s")
    grid = np.linspace(0.0, edges[-1], 301)
    columns = [integrated_distribution(s, grid)] + [SpacingLaw(r).cdf(grid) for r in references]
    _write_rows(run.path(f"{prefix}integrated.csv"), ["s", "empirical"] + list(references),
                zip(grid, *columns))
    summaries = [ex.spacing_summary(s, r, edges, fit_range) for r in references]
    rows = [sm.as_row() for sm in summaries]
    _write_rows(run.path(f"{prefix}summary.csv"), list(rows[0]), [list(r.values()) for r in rows])
    return {r: sm.as_row() for r, sm in zip(references, summaries)}


# --------------------------------------------------------------------------- experiments


def run_spectrum(run: Run) -> None:
    g = run.cfg.graph()
    spec = find_spectrum(g, _k_range(run.cfg, "solver", (0.5, 100.0)), _solver_options(run.cfg, run.args.threads))
    write_spectrum_csv(spec, run.path("spectrum.csv"))
    run.artifacts.append("spectrum.csv.json")
    run.results.update(count=spec.count, distinct=len(spec))
    run.check("weyl_count", spec.metadata["weyl_ok"])


def run_kramers(run: Run) -> None:
    g = run.cfg.graph()
    spec = find_spectrum(g, _k_range(run.cfg, "solver", (0.5, 100.0)), _solver_options(run.cfg, run.args.threads))
    write_spectrum_csv(spec, run.path("spectrum.csv"))
    run.artifacts.append("spectrum.csv.json")
    ratio = spec.metadata["max_doublet_split"] / spec.metadata["mean_spacing"]
    report = verify_symplectic_symmetry(g, np.linspace(spec.k_range[0], spec.k_range[1], 7) + 0.123)
    tol = spec.metadata["degeneracy_tol"]
    run.results.update(
        levels=len(spec), all_doublets=bool(np.all(spec.multiplicities == 2)), max_split_ratio=ratio,
        symplectic_residual=report.symplectic_residual, t_squared=report.t_squared_symplectic,
        verdict=report.verdict,
    )
    print(f"max doublet split / mean spacing = {ratio:.3e} {'<' if ratio < tol else '>='} {tol:g}")
    _write_rows(run.path("kramers.csv"), ["quantity", "value"],
                [[k, v] for k, v in run.results.items()])
    run.check("weyl_count", spec.metadata["weyl_ok"])
    run.check("all_doublets", run.results["all_doublets"])
    run.check("doublet_split", ratio < tol)


def run_transmission_map(run: Run) -> None:
    cfg = run.cfg
    spec = cfg.pair_spec()
    ports = PortSet(tuple(cfg.get("ports", "vertices", [0, spec.base.vertex_count])))
    lo, hi, n = cfg.get("scattering", "delta_l", [0.0, 0.5, 101])
    rows = np.linspace(float(lo), float(hi), int(n))
    k_min, k_max = _k_range(cfg, "scattering", (1.0, 50.0))
    k = np.arange(k_min, k_max, float(cfg.get("scattering", "k_step", 0.01)))
    twist = cfg.get("scattering", "twist", "length")
    tmap = transmission_map(spec, ports, rows, k, run.eta, twist, bool(cfg.get("options", "normalize", False)))
    if run.args.remap_phase:
        bins = int(cfg.get("scattering", "phi_bins", 64))
        phi_max = float(cfg.get("scattering", "phi_max", 4.0 * math.pi))
        tmap = remap_to_phase(tmap, np.linspace(spec.delta_phi, spec.delta_phi + phi_max, bins + 1))
    tmap.to_csv(run.path("transmission_map.csv"))
    tmap.to_grid_text(run.path("transmission_map.txt"))
    finite = tmap.values[np.isfinite(tmap.values)]
    run.results.update(rows=tmap.rows.size, k_points=k.size, max_transmission=float(finite.max(initial=0.0)))
    run.check("transmission_bounded", np.all((finite >= -1e-12) & (finite <= 1 + 1e-9)))


def run_phase_extraction(run: Run) -> None:
    cfg = run.cfg
    g = cfg.graph()
    sc = cfg.table("scattering")
    port = int(cfg.get("ports", "vertices", [0])[0])
    k_range = _k_range(cfg, "scattering", (1.0, 201.0))
    kwargs = dict(port=port, k_range=k_range, k_step=float(sc.get("k_step", 2e-4)), eta=run.eta,
                  discriminator=float(sc.get("discriminator", 0.0)),
                  split_overlaps=bool(sc.get("split_overlaps", True)))
    res = ex.phase_extraction(g, tolerance=sc.get("tolerance"), **kwargs)
    _write_rows(run.path("extracted.csv"), ["index", "k"], enumerate(res.extracted.values))
    write_spectrum_csv(res.reference, run.path("reference.csv"), diagnostics=False)
    run.results.update(recall=res.recall, tolerance=res.tolerance, found=len(res.extracted),
                       reference=len(res.reference), median_offset=float(np.median(np.abs(res.offsets))))
    run.check("weyl_count", res.reference.metadata["weyl_ok"])
    sigmas = sc.get("perturbations")
    if sigmas:
        seed = int(sc.get("perturbation_seed", run.seed or 0))
        sweep = ex.perturbation_sweep(g, sigmas, seed, tolerance=res.tolerance, **kwargs)
        _write_rows(run.path("perturbation_sweep.csv"), ["sigma", "recall", "peaks"], sweep)
        run.results["sweep"] = sweep


def run_spacing_gse(run: Run) -> None:
    phase = _phases(run.cfg, 1.0)[0]
    ens = _pair_ensemble(run.cfg, run.seed, math.pi * phase)
    unfolded = ens.unfolded(run.args.threads)
    s = pooled_spacings(unfolded)
    mean = float(s.mean())
    _write_rows(run.path("spacings.csv"), ["index", "s"], enumerate(s / mean))
    run.results.update(doublets=int(sum(len(u) for u in unfolded)), spacings=s.size, unfolded_mean=mean)
    run.results["spacing"] = _write_spacing_outputs(run, s / mean, "", ("WignerGSE", "WignerGUE", "WignerGOE"))
    run.check("unfolding_mean", abs(mean - 1.0) < UNFOLD_TOLERANCE)


def run_coupled_block(run: Run) -> None:
    e = run.cfg.table("ensemble")
    s = ex.coupled_block_spacings(e.get("sub_dim", 100), e.get("realizations", 2000), e.get("seed", run.seed),
                                  e.get("central_fraction", 0.1), e.get("coupling_scale", 1.0), run.args.threads)
    _write_rows(run.path("spacings.csv"), ["index", "s"], enumerate(s))
    run.results["spacing"] = _write_spacing_outputs(run, s, "", ("SinglePairBonds", "WignerGSE"))
    grid = np.linspace(0.0, 4.0, 401)
    gap = np.abs(SpacingLaw("SinglePairBonds").pdf(grid) - SpacingLaw("WignerGSE").pdf(grid))
    run.results.update(spacings=s.size, sup_distance_to_gse=float(gap.max()))
    run.check("unfolding_mean", abs(s.mean() - 1.0) < 1e-9)


def _stats_ensemble(run: Run):
    e = run.cfg.table("ensemble")
    fraction = float(run.cfg.get("stats", "unfold_fraction", 0.8))
    if "graph_ensemble" in run.cfg.data:
        ens = _pair_ensemble(run.cfg, run.seed, math.pi * _phases(run.cfg, 1.0)[0])
        return ens.unfolded(run.args.threads)
    kind = e.get("kind", "GSE")
    spec = EnsembleSpec(kind, e.get("dim", 400), e.get("realizations", 500), e.get("seed", run.seed),
                        e.get("sub_dim"), e.get("coupling_scale", 1.0))
    values = ensemble_eigenvalues(spec, run.args.threads)
    if spec.degenerate:
        values = [doublet_centres(v)[0] for v in values]
    return unfold_ensemble(values, fraction, 5)


def run_stats_suite(run: Run) -> None:
    st = run.cfg.table("stats")
    unfolded = _stats_ensemble(run)
    mean = float(np.mean(pooled_spacings(unfolded)))
    run.check("unfolding_mean", abs(mean - 1.0) < UNFOLD_TOLERANCE)
    run.results.update(realizations=len(unfolded), levels=int(sum(len(u) for u in unfolded)), unfolded_mean=mean)

    s = pooled_spacings(unfolded)
    run.results["spacing"] = _write_spacing_outputs(run, s / mean, "spacing_", ("WignerGSE",))

    tau_step = float(st.get("tau_step", 0.01))
    tau = np.arange(tau_step, float(st.get("tau_max", 2.0)) + 0.5 * tau_step, tau_step)
    kf = form_factor(unfolded, tau, bool(st.get("keep_diagonal", True)), st.get("taper"))
    kf.to_csv(run.path("form_factor.csv"), "tau")

    L_step = float(st.get("L_step", 0.25))
    L = np.arange(L_step, float(st.get("L_max", 2.0)) + 0.5 * L_step, L_step)
    sigma2 = number_variance(unfolded, L)
    sigma2.to_csv(run.path("number_variance.csv"), "L")
    spectral_rigidity(unfolded, L).to_csv(run.path("rigidity.csv"), "L")
    grid = np.arange(0.0, L[-1] + 1e-9, 0.01)
    s2_fine = number_variance(unfolded, grid[1:])
    s2_curve = np.concatenate([[0.0], s2_fine.value])
    from_s2 = np.array([delta3_from_sigma2(x, grid, s2_curve) for x in L])
    ObservableCurve(L, from_s2, sigma2.counts, name="delta3_from_sigma2").to_csv(
        run.path("rigidity_from_sigma2.csv"), "L")

    edges = np.linspace(0.0, 3.0, 61)
    two_point_correlation(unfolded, edges).to_csv(run.path("two_point.csv"), "r")
    _write_rows(run.path("reference_form_factor.csv"), ["tau", "gse"], zip(tau, gse_form_factor(tau)))
    _write_rows(run.path("reference_fluctuations.csv"), ["L", "number_variance_gse", "rigidity_gse"],
                zip(L, gse_number_variance(L), gse_rigidity(L)))
    # the reference diverges at tau = 1; score the two sides separately
    off_peak = ((tau >= 0.1) & (tau <= 0.9)) | ((tau >= 1.1) & (tau <= 1.9))
    run.results["form_factor_mae"] = float(np.mean(np.abs(kf.value - gse_form_factor(tau))[off_peak]))


def run_gse_goe_sweep(run: Run) -> None:
    rows = []
    for phase in _phases(run.cfg, [1.0, 1.5, 2.0]):
        ens = _pair_ensemble(run.cfg, run.seed, math.pi * phase)
        s = pooled_spacings(ens.unfolded(run.args.threads))
        s = s / s.mean()
        tag = f"{phase:g}".replace(".", "p")
        summary = _write_spacing_outputs(run, s, f"dphi_{tag}pi_", ("WignerGSE", "WignerGUE", "WignerGOE"))
        gse = summary["WignerGSE"]
        rows.append([phase, s.size, gse["slope"], gse["slope_stderr"], gse["slope_points"],
                     summary["WignerGSE"]["p_value"], summary["WignerGUE"]["p_value"],
                     summary["WignerGOE"]["p_value"]])
    _write_rows(run.path("sweep.csv"), ["delta_phi_over_pi", "spacings", "slope", "slope_stderr",
                                        "slope_points", "p_gse", "p_gue", "p_goe"], rows)
    run.results["sweep"] = rows
    run.check("slopes_fitted", all(r[2] is not None for r in rows))


def run_theory_curves(run: Run) -> None:
    for p in export_theory_curves(run.out):
        run.artifacts.append(p.name)
    z = np.linspace(0.0, 4.0, 401)
    _write_rows(run.path("coupling_density.csv"), ["z", "pdf", "cdf"],
                zip(z, coupling_density_pV(z), coupling_cdf(z)))
    for kind in ("WignerGOE", "WignerGUE", "WignerGSE", "SinglePairBonds"):
        law = SpacingLaw(kind)
        run.check(f"{kind}_mass", abs(law.mass() - 1.0) < 1e-6)
        run.check(f"{kind}_mean", abs(law.mean() - 1.0) < 1e-6)


RUNNERS = {
    "spectrum": run_spectrum,
    "kramers": run_kramers,
    "transmission_map": run_transmission_map,
    "phase_extraction": run_phase_extraction,
    "spacing_gse": run_spacing_gse,
    "coupled_block_sim": run_coupled_block,
    "stats_suite": run_stats_suite,
    "gse_goe_sweep": run_gse_goe_sweep,
    "theory_curves": run_theory_curves,
}


# --------------------------------------------------------------------------- plumbing


def _versions() -> dict:
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "sgraphs": own}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgraphs", description="Spectral statistics of graphs with symplectic symmetry")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="experiment")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", required=name != "theory_curves", help="TOML experiment file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes")
        p.add_argument("--eta", type=float, help="absorption for scattering runs")
        p.add_argument("--remap-phase", action="store_true", help="transmission map on twist phase rows")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(args) -> int:
    """Execute one experiment; returns the process exit status."""
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig({})
        declared = cfg.data.get("experiment")
        if declared is not None and declared != args.experiment:
            raise ConfigError(f"config declares experiment {declared!r}, not {args.experiment!r}",
                              source=cfg.source)
        if args.experiment in STOCHASTIC and args.seed is None and cfg.seed is None:
            raise ConfigError(f"{args.experiment} is stochastic and needs a seed", source=cfg.source)
    except ConfigError as exc:
        print(f"sgraphs: {exc}", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("sgraphs: --threads must be positive", file=sys.stderr)
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = Run(cfg, args, out)
    status, error = 0, None
    try:
        RUNNERS[args.experiment](state)
    except ConfigError as exc:
        print(f"sgraphs: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # report solver failures with context, keep the manifest
        error = f"{args.experiment}: {type(exc).__module__}.{type(exc).__name__}: {exc}"
        print(f"sgraphs: {error}", file=sys.stderr)
        status = 1
    missing = [a for a in state.artifacts if not (out / a).is_file()]
    if missing or not all(state.checks.values()):
        status = 1
    manifest = {
        "experiment": args.experiment,
        "config": cfg.source,
        "config_sha256": cfg.sha256 or None,
        "seed": state.seed,
        "threads": args.threads,
        "eta": state.eta if args.experiment in ("transmission_map", "phase_extraction") else None,
        "versions": _versions(),
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "artifacts": state.artifacts,
        "missing": missing,
        "checks": state.checks,
        "results": state.results,
        "error": error,
        "status": status,
    }
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2) + "\n")
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
