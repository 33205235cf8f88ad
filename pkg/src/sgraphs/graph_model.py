"""Metric graphs with magnetic bond phases and the symplectic-pair construction.

A :class:`Graph` is an immutable list of :class:`Bond` objects on ``vertex_count``
vertices.  Each bond stores one canonical direction ``i -> j`` together with its
length and the phase ``phi_ij`` picked up along it; the reverse direction carries
``-phi_ij`` implicitly.

The pair construction glues a base graph to its complex-conjugate copy (all
phases negated) with pairs of cross bonds ``a -> b'`` and ``b -> a'``, the second
bond of every pair carrying the extra twist ``delta_phi``.  At ``delta_phi = pi``
the resulting secular matrix has an antiunitary symmetry squaring to ``-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import networkx as nx
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "Bond",
    "Graph",
    "Connection",
    "SymplecticPairSpec",
    "GraphError",
    "total_length",
    "normalize_to_unit_density",
    "random_subgraph",
    "build_symplectic_pair",
    "random_pair_spec",
    "perturb_lengths",
    "star_graph",
]

LENGTH_JITTER = 1e-3


class GraphError(ValueError):
    """Invalid graph structure or construction parameters."""


def wrap_phase(phase: float) -> float:
    """Map a phase onto the interval (-pi, pi]."""
    wrapped = math.remainder(phase, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    length: float
    phase: float = 0.0

    def __post_init__(self):
        if self.i == self.j:
            raise GraphError(f"self-loop at vertex {self.i} is not supported")
        if min(self.i, self.j) < 0:
            raise GraphError(f"negative vertex index in bond ({self.i}, {self.j})")
        if not (self.length > 0.0 and math.isfinite(self.length)):
            raise GraphError(f"bond ({self.i}, {self.j}) has non-positive length {self.length}")
        object.__setattr__(self, "phase", wrap_phase(float(self.phase)))
        object.__setattr__(self, "length", float(self.length))

    def scaled(self, factor: float) -> "Bond":
        return Bond(self.i, self.j, self.length * factor, self.phase)


@dataclass(frozen=True)
class Graph:
    """Metric graph with directed bond phases.

    Parameters
    ----------
    vertex_count : int
        Number of vertices; vertices are labelled ``0 .. vertex_count - 1``.
    bonds : sequence of Bond
        Bonds in canonical direction.  Parallel bonds between the same pair of
        vertices are allowed and contribute additively to the secular matrix.
    labels : sequence of str, optional
        Free-form per-vertex annotations such as ``"port"``.
    """

    vertex_count: int
    bonds: tuple[Bond, ...]
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.vertex_count <= 0:
            raise GraphError("vertex_count must be positive")
        object.__setattr__(self, "bonds", tuple(self.bonds))
        for b in self.bonds:
            if b.i >= self.vertex_count or b.j >= self.vertex_count:
                raise GraphError(
                    f"bond ({b.i}, {b.j}) references a vertex >= {self.vertex_count}"
                )
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.vertex_count:
                raise GraphError("labels must have one entry per vertex")

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Bond endpoints, lengths and phases as numpy arrays ``(i, j, L, phi)``."""
        i = np.array([b.i for b in self.bonds], dtype=np.intp)
        j = np.array([b.j for b in self.bonds], dtype=np.intp)
        lengths = np.array([b.length for b in self.bonds], dtype=float)
        phases = np.array([b.phase for b in self.bonds], dtype=float)
        return i, j, lengths, phases

    @property
    def total_length(self) -> float:
        return total_length(self)

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.vertex_count, dtype=int)
        for b in self.bonds:
            deg[b.i] += 1
            deg[b.j] += 1
        return deg

    def is_connected(self) -> bool:
        if self.vertex_count == 1:
            return True
        i, j, _, _ = self.arrays
        adj = coo_matrix(
            (np.ones(len(i)), (i, j)), shape=(self.vertex_count, self.vertex_count)
        )
        n_comp, _ = connected_components(adj, directed=False)
        return n_comp == 1

    def with_bonds(self, bonds: Sequence[Bond]) -> "Graph":
        return Graph(self.vertex_count, tuple(bonds), self.labels)


@dataclass(frozen=True)
class Connection:
    """One pair of cross bonds ``a -> b'`` (no twist) and ``b -> a'`` (twisted)."""

    a: int
    b: int
    length: float

    def __post_init__(self):
        if self.a == self.b:
            raise GraphError("connection endpoints must be distinct vertices")
        if not self.length > 0.0:
            raise GraphError("connection length must be positive")


@dataclass(frozen=True)
class SymplecticPairSpec:
    base: Graph
    connections: tuple[Connection, ...]
    delta_phi: float = math.pi

    def __post_init__(self):
        object.__setattr__(self, "connections", tuple(self.connections))
        if not 1 <= len(self.connections) <= 2:
            raise GraphError("a pair graph needs one or two connection pairs")
        n = self.base.vertex_count
        for c in self.connections:
            if not (0 <= c.a < n and 0 <= c.b < n):
                raise GraphError(f"connection ({c.a}, {c.b}) is outside the base graph")


def total_length(g: Graph) -> float:
    """Sum of all bond lengths."""
    return math.fsum(b.length for b in g.bonds)


def normalize_to_unit_density(g: Graph) -> Graph:
    """Rescale all lengths so that the total length is ``pi``.

    With ``L = pi`` the Weyl density ``L / pi`` is one, i.e. the mean level
    spacing in ``k`` is unity.  Phases are left untouched.
    """
    total = total_length(g)
    if total <= 0.0:
        raise GraphError("cannot normalize a graph with zero total length")
    factor = math.pi / total
    if factor == 1.0:
        return g
    return g.with_bonds([b.scaled(factor) for b in g.bonds])


def _jittered_lengths(rng: np.random.Generator, count: int, low: float, high: float) -> np.ndarray:
    lengths = rng.uniform(low, high, size=count)
    # relative jitter keeps lengths rationally independent
    return lengths * (1.0 + LENGTH_JITTER * rng.uniform(-1.0, 1.0, size=count))


def random_subgraph(
    vertex_count: int,
    length_range: tuple[float, float] = (0.5, 1.5),
    phase_policy: str = "random_uniform",
    seed: int = 0,
    max_tries: int = 100,
) -> Graph:
    """Draw a connected cubic graph with random incommensurate bond lengths.

    Parameters
    ----------
    vertex_count : int
        Even number of vertices, at least 4.
    length_range : (float, float)
        Bond lengths are drawn uniformly from this interval, then jittered by a
        relative factor of order ``1e-3``.
    phase_policy : {"none", "random_uniform"}
        ``"none"`` keeps time-reversal symmetry (GOE-like spectra),
        ``"random_uniform"`` draws every bond phase uniformly in (-pi, pi].
    seed : int
        Seed for both the topology and the metric data.
    """
    if vertex_count < 4 or vertex_count % 2:
        raise GraphError("cubic graphs need an even vertex_count >= 4")
    low, high = length_range
    if not 0.0 < low <= high:
        raise GraphError("length_range must be positive and ordered")
    if phase_policy not in ("none", "random_uniform"):
        raise GraphError(f"unknown phase_policy {phase_policy!r}")

    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        topo_seed = int(rng.integers(2**31 - 1))
        nxg = nx.random_regular_graph(3, vertex_count, seed=topo_seed)
        if nx.is_connected(nxg):
            break
    else:
        raise GraphError(f"no connected cubic graph found in {max_tries} tries")

    edges = sorted(tuple(sorted(e)) for e in nxg.edges())
    lengths = _jittered_lengths(rng, len(edges), low, high)
    if phase_policy == "random_uniform":
        phases = -rng.uniform(-np.pi, np.pi, size=len(edges))
    else:
        phases = np.zeros(len(edges))
    bonds = [Bond(i, j, float(l), float(p)) for (i, j), l, p in zip(edges, lengths, phases)]
    return Graph(vertex_count, tuple(bonds))


def build_symplectic_pair(spec: SymplecticPairSpec, extra_lengths: Sequence[float] | None = None) -> Graph:
    """Join ``spec.base`` to its conjugate copy with twisted cross-bond pairs.

    Vertices ``0 .. n-1`` hold the base graph and ``n .. 2n-1`` the copy, so the
    image of vertex ``v`` is ``v + n``.  For each connection ``(a, b, l)`` the
    bonds ``a -> b + n`` (phase 0) and ``b -> a + n`` (phase ``delta_phi``) are
    added.

    ``extra_lengths`` optionally lengthens the twisted bond of each pair, which
    is how a mechanical phase shifter realizes the twist; it is used by the
    transmission-map sweeps and leaves ``delta_phi`` as an additional phase.
    """
    base = spec.base
    n = base.vertex_count
    bonds = list(base.bonds)
    bonds += [Bond(b.i + n, b.j + n, b.length, -b.phase) for b in base.bonds]
    if extra_lengths is None:
        extra_lengths = [0.0] * len(spec.connections)
    if len(extra_lengths) != len(spec.connections):
        raise GraphError("one extra length per connection is required")
    for c, dl in zip(spec.connections, extra_lengths):
        bonds.append(Bond(c.a, c.b + n, c.length, 0.0))
        bonds.append(Bond(c.b, c.a + n, c.length + dl, spec.delta_phi))
    labels = None
    if base.labels is not None:
        labels = tuple(base.labels) + tuple(f"{lab}'" for lab in base.labels)
    return Graph(2 * n, tuple(bonds), labels)


def random_pair_spec(
    vertex_count: int,
    connections: int = 2,
    delta_phi: float = math.pi,
    length_range: tuple[float, float] = (0.5, 1.5),
    phase_policy: str = "random_uniform",
    seed: int = 0,
    max_tries: int = 200,
) -> SymplecticPairSpec:
    """Pair spec whose full graph is cubic.

    A connected cubic graph is drawn and ``connections`` vertex-disjoint bonds
    ``(a, b)`` are cut out of it, leaving ``a`` and ``b`` with degree two.
    Each cut bond is replaced by the cross pair ``a -> b'``, ``b -> a'`` with
    the same length, so every vertex of the pair graph is a T-junction.
    """
    if connections not in (1, 2):
        raise GraphError("a pair graph needs one or two connection pairs")
    cubic = random_subgraph(vertex_count, length_range, phase_policy, seed)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    for _ in range(max_tries):
        picked = rng.choice(len(cubic.bonds), size=connections, replace=False)
        ends = [v for idx in picked for v in (cubic.bonds[idx].i, cubic.bonds[idx].j)]
        if len(set(ends)) != len(ends):
            continue
        base = cubic.with_bonds([b for idx, b in enumerate(cubic.bonds) if idx not in set(picked)])
        if base.is_connected():
            break
    else:
        raise GraphError("could not cut disjoint bonds without disconnecting the graph")
    links = tuple(
        Connection(cubic.bonds[idx].i, cubic.bonds[idx].j, cubic.bonds[idx].length)
        for idx in sorted(picked)
    )
    return SymplecticPairSpec(base, links, delta_phi)


def perturb_lengths(g: Graph, sigma: float, seed: int) -> Graph:
    """Multiply every bond length by ``1 + sigma * N(0, 1)``.

    Emulates construction tolerances: applied to a pair graph it makes the two
    subgraphs slightly different and lifts the exact Kramers degeneracy.
    """
    if sigma < 0:
        raise GraphError("sigma must be non-negative")
    if sigma == 0:
        return g
    rng = np.random.default_rng(seed)
    factors = 1.0 + sigma * rng.standard_normal(len(g.bonds))
    if np.any(factors <= 0):
        raise GraphError("perturbation produced a non-positive length")
    return g.with_bonds([b.scaled(float(f)) for b, f in zip(g.bonds, factors)])


def star_graph(l1: float, l2: float) -> Graph:
    """Center vertex 0 with two leaves; spectrum ``n pi / (l1 + l2)``."""
    return Graph(3, (Bond(0, 1, l1), Bond(0, 2, l2)))
