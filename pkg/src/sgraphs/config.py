"""Experiment configuration files.

Configs are TOML documents.  Graph data uses the tables ``[vertices]``,
``[[bond]]``, ``[random_base]``, ``[pair]`` and ``[ports]``; experiment
settings live in ``[solver]``, ``[ensemble]``, ``[graph_ensemble]``,
``[scattering]``, ``[stats]`` and ``[options]``.  Every table accepts only the
keys listed in :data:`SCHEMA`; an unknown key or a wrongly typed value raises
:class:`ConfigError` with the line and column where it appears.

Example::

    seed = 7

    [vertices]
    count = 3

    [[bond]]
    i = 0
    j = 1
    length = 1.0

    [[bond]]
    i = 0
    j = 2
    length = 1.618

    [solver]
    k_min = 0.5
    k_max = 200.0
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .graph_model import (
    Bond,
    Connection,
    Graph,
    SymplecticPairSpec,
    build_symplectic_pair,
    normalize_to_unit_density,
    random_pair_spec,
    random_subgraph,
)

__all__ = ["ConfigError", "ExperimentConfig", "SCHEMA", "load_config", "parse_config"]

_NUM = (int, float)

# table -> key -> accepted python types
SCHEMA: dict[str, dict[str, tuple]] = {
    "": {"experiment": (str,), "seed": (int,)},
    "vertices": {"count": (int,), "labels": (list,)},
    "bond": {"i": (int,), "j": (int,), "length": _NUM, "phase": _NUM},
    "random_base": {
        "vertex_count": (int,), "length_range": (list,), "phase_policy": (str,), "seed": (int,),
    },
    "pair": {
        "connections": (list,), "connection_count": (int,), "delta_phi": _NUM,
        "delta_phi_over_pi": _NUM,
    },
    "ports": {"vertices": (list,)},
    "solver": {
        "k_min": _NUM, "k_max": _NUM, "grid_step": _NUM, "tol": _NUM, "degeneracy_tol": _NUM,
        "eps_pole": _NUM,
    },
    "ensemble": {
        "kind": (str,), "dim": (int,), "realizations": (int,), "sub_dim": (int,),
        "coupling_scale": _NUM, "central_fraction": _NUM, "seed": (int,),
    },
    "graph_ensemble": {
        "graphs": (int,), "base_vertices": (int,), "connections": (int,), "first_seed": (int,),
        "delta_phi_over_pi": (list,) + _NUM, "length_range": (list,), "phase_policy": (str,),
        "k_min": _NUM, "k_max": _NUM,
    },
    "scattering": {
        "eta": _NUM, "k_min": _NUM, "k_max": _NUM, "k_step": _NUM, "delta_l": (list,),
        "phi_bins": (int,), "phi_max": _NUM, "discriminator": _NUM, "tolerance": _NUM,
        "perturbations": (list,), "perturbation_seed": (int,), "twist": (str,),
        "split_overlaps": (bool,), "cable_length": _NUM,
    },
    "stats": {
        "s_max": _NUM, "bin_width": _NUM, "fit_range": (list,), "L_max": _NUM, "L_step": _NUM,
        "tau_max": _NUM, "tau_step": _NUM, "taper": (str,), "keep_diagonal": (bool,),
        "unfold_fraction": _NUM, "missing_fraction": _NUM,
    },
    "options": {"normalize": (bool,)},
}
_ARRAY_TABLES = {"bond"}


class ConfigError(ValueError):
    """Invalid configuration, with an optional source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None,
                 source: str | None = None):
        self.line, self.column, self.source = line, column, source
        where = ""
        if line is not None:
            where = f"{source or '<config>'}:{line}:{column or 1}: "
        super().__init__(where + message)


def _locate(text: str, table: str, key: str, occurrence: int = 0) -> tuple[int | None, int | None]:
    """Best-effort line/column of ``key`` inside ``table`` (1-based)."""
    current, seen = "", -1
    header = re.compile(r"^\s*\[\[?\s*([A-Za-z0-9_.]+)\s*\]\]?")
    for n, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            current = m.group(1)
            if current == table:
                seen += 1
            continue
        if current == table and (table not in _ARRAY_TABLES or seen == occurrence):
            km = re.match(rf"^(\s*){re.escape(key)}\s*=", line)
            if km:
                return n, len(km.group(1)) + 1
    return None, None


@dataclass
class ExperimentConfig:
    """Parsed configuration plus the raw text hash used for provenance."""

    data: dict[str, Any]
    text: str = ""
    source: str | None = None
    sha256: str = ""

    def table(self, name: str) -> dict[str, Any]:
        return dict(self.data.get(name, {}))

    def get(self, table: str, key: str, default=None):
        return self.data.get(table, {}).get(key, default)

    @property
    def seed(self) -> int | None:
        return self.data.get("seed")

    @property
    def has_graph(self) -> bool:
        return bool(self.data.get("bond")) or "random_base" in self.data

    def _error(self, message: str, table: str = "", key: str | None = None) -> ConfigError:
        line = col = None
        if key is not None:
            line, col = _locate(self.text, table, key)
        return ConfigError(message, line, col, self.source)

    def base_graph(self) -> Graph:
        """Graph from explicit ``[[bond]]`` entries or from ``[random_base]``."""
        if self.data.get("bond"):
            bonds = [Bond(b["i"], b["j"], float(b["length"]), float(b.get("phase", 0.0)))
                     for b in self.data["bond"]]
            count = self.get("vertices", "count")
            if count is None:
                count = 1 + max(max(b.i, b.j) for b in bonds)
            labels = self.get("vertices", "labels")
            return Graph(int(count), tuple(bonds), tuple(labels) if labels else None)
        if "random_base" in self.data:
            rb = self.table("random_base")
            return random_subgraph(
                rb.get("vertex_count", 8), tuple(rb.get("length_range", (0.5, 1.5))),
                rb.get("phase_policy", "random_uniform"), rb.get("seed", self.seed or 0),
            )
        raise self._error("no graph: give [[bond]] entries or a [random_base] table")

    def delta_phi(self) -> float:
        pair = self.table("pair")
        if "delta_phi" in pair and "delta_phi_over_pi" in pair:
            raise self._error("give either delta_phi or delta_phi_over_pi", "pair", "delta_phi")
        if "delta_phi_over_pi" in pair:
            return math.pi * float(pair["delta_phi_over_pi"])
        return float(pair.get("delta_phi", math.pi))

    def pair_spec(self) -> SymplecticPairSpec:
        pair = self.table("pair")
        if "connection_count" in pair:
            if "connections" in pair:
                raise self._error("give either connections or connection_count", "pair", "connection_count")
            if "random_base" not in self.data:
                raise self._error("connection_count needs a [random_base] table", "pair", "connection_count")
            rb = self.table("random_base")
            return random_pair_spec(
                rb.get("vertex_count", 8), pair["connection_count"], self.delta_phi(),
                tuple(rb.get("length_range", (0.5, 1.5))), rb.get("phase_policy", "random_uniform"),
                rb.get("seed", self.seed or 0),
            )
        raw = pair.get("connections")
        if not raw:
            raise self._error("[pair] needs connections or connection_count", "pair")
        links = []
        for item in raw:
            if not (isinstance(item, list) and len(item) == 3):
                raise self._error("each connection is [a, b, length]", "pair", "connections")
            links.append(Connection(int(item[0]), int(item[1]), float(item[2])))
        return SymplecticPairSpec(self.base_graph(), tuple(links), self.delta_phi())

    def graph(self) -> Graph:
        """The graph to simulate: the pair graph when ``[pair]`` is present."""
        g = build_symplectic_pair(self.pair_spec()) if "pair" in self.data else self.base_graph()
        if self.get("options", "normalize", "pair" in self.data or "random_base" in self.data):
            g = normalize_to_unit_density(g)
        return g


def _validate(data: dict, text: str, source: str | None) -> None:
    def fail(msg, table, key, occurrence=0):
        line, col = _locate(text, table, key, occurrence) if key else (None, None)
        raise ConfigError(msg, line, col, source)

    for key, value in data.items():
        if isinstance(value, dict) or (isinstance(value, list) and key in _ARRAY_TABLES):
            if key not in SCHEMA:
                fail(f"unknown table [{key}]", "", None)
            continue
        if key not in SCHEMA[""]:
            fail(f"unknown top-level key {key!r}", "", key)
        if not isinstance(value, SCHEMA[""][key]) or isinstance(value, bool) and bool not in SCHEMA[""][key]:
            fail(f"{key!r} has the wrong type", "", key)
    for table, allowed in SCHEMA.items():
        if not table or table not in data:
            continue
        entries = data[table]
        if table in _ARRAY_TABLES:
            if not isinstance(entries, list):
                fail(f"[[{table}]] must be an array of tables", table, None)
        else:
            if not isinstance(entries, dict):
                fail(f"[{table}] must be a table", table, None)
            entries = [entries]
        for occurrence, entry in enumerate(entries):
            for key, value in entry.items():
                if key not in allowed:
                    fail(f"unknown key {key!r} in [{table}]", table, key, occurrence)
                types = allowed[key]
                if isinstance(value, bool) and bool not in types:
                    fail(f"{table}.{key} has the wrong type", table, key, occurrence)
                if not isinstance(value, types):
                    fail(f"{table}.{key} must be {'/'.join(t.__name__ for t in types)}", table, key, occurrence)
            if table == "bond":
                for key in ("i", "j", "length"):
                    if key not in entry:
                        raise ConfigError(f"[[bond]] #{occurrence + 1} is missing {key!r}", source=source)


def parse_config(text: str, source: str | None = None) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ConfigError(str(exc).split(" (at line")[0], line, col, source) from None
    _validate(data, text, source)
    digest = hashlib.sha256(text.encode()).hexdigest()
    return ExperimentConfig(data, text, source, digest)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config(path.read_text(), str(path))
