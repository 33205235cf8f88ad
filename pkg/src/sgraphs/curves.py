"""Tabulated observable curves and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class ObservableCurve:
    """Abscissa/value pairs with per-point sample counts and standard errors."""

    abscissa: np.ndarray
    value: np.ndarray
    counts: np.ndarray
    sigma: np.ndarray | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        self.counts = np.asarray(self.counts)
        if self.sigma is None:
            self.sigma = np.full(self.value.shape, np.nan)
        self.sigma = np.asarray(self.sigma, dtype=float)
        n = self.abscissa.size
        if not (self.value.size == self.counts.size == self.sigma.size == n):
            raise ValueError("curve columns must have equal lengths")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    def __len__(self) -> int:
        return self.abscissa.size

    def to_csv(self, path: str | Path, abscissa_name: str = "x") -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([abscissa_name, "value", "count", "sigma"])
            for row in zip(self.abscissa, self.value, self.counts, self.sigma):
                writer.writerow([repr(float(row[0])), repr(float(row[1])), int(row[2]), repr(float(row[3]))])
        return path
