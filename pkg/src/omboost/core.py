"""Shared types for multiclass online boosting.

Labels are 0-based integers inside the library. Anything written for humans
(CSV results, audit logs, CLI output) shows them 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

ROW_NORM_TOL = 1e-9


class CostKind(str, Enum):
    EOR = "eor_normalized"
    GRADIENT = "gradient"


@dataclass(frozen=True)
class LabelSpace:
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"need at least 2 classes, got k={self.k}")

    def __contains__(self, label) -> bool:
        return 0 <= int(label) < self.k


@dataclass(frozen=True)
class Example:
    features: np.ndarray
    label: int
    weight: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError(f"weight must lie in [0, 1], got {self.weight}")
        if self.label < 0:
            raise ValueError(f"negative label {self.label}")


@dataclass(frozen=True)
class CostMatrix:
    entries: np.ndarray
    kind: CostKind = CostKind.EOR

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]


@dataclass(frozen=True)
class EdgeDistribution:
    """Uniform over k labels with ``gamma`` extra mass on ``favored``."""

    k: int
    gamma: float
    favored: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"edge must lie in [0, 1), got {self.gamma}")
        if not 0 <= self.favored < self.k:
            raise ValueError(f"favored label {self.favored} outside [0, {self.k})")

    def masses(self) -> np.ndarray:
        return edge_masses(self.k, self.gamma, self.favored)


def edge_masses(k: int, gamma: float, favored: int) -> np.ndarray:
    u = np.full(k, (1.0 - gamma) / k)
    u[favored] += gamma
    return u


def edge_distribution_sample(d: EdgeDistribution, rng: np.random.Generator, size=None):
    """Draw label(s) from ``d``; returns an int, or an array when ``size`` is given."""
    # inverse CDF on one uniform per draw keeps streams aligned across k
    cdf = np.cumsum(d.masses())
    u = rng.random(size)
    out = np.minimum(np.searchsorted(cdf, u, side="right"), d.k - 1)
    return int(out) if size is None else out


def argmax_label(s) -> int:
    """Index of the largest vote; ties go to the lowest index."""
    return int(np.argmax(np.asarray(s)))


@dataclass
class ValidityReport:
    violations: list[tuple[int, str]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid

    def add(self, row: int, message: str):
        self.violations.append((row, message))


def validate_cost_matrix(C: CostMatrix | np.ndarray, kind: CostKind | str | None = None,
                         k: int | None = None, tol: float = ROW_NORM_TOL) -> ValidityReport:
    """Check the row invariants of a cost matrix for its declared kind.

    Raises ``ValueError`` when the matrix is not square (or not k x k when
    ``k`` is given); all other problems are reported per row.
    """
    if isinstance(C, CostMatrix):
        entries = C.entries
        kind = CostKind(kind) if kind is not None else C.kind
    else:
        entries = np.asarray(C, dtype=float)
        kind = CostKind(kind) if kind is not None else CostKind.EOR
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValueError(f"cost matrix must be square, got shape {entries.shape}")
    if k is not None and entries.shape[0] != k:
        raise ValueError(f"expected {k}x{k} cost matrix, got {entries.shape}")

    report = ValidityReport()
    n = entries.shape[0]
    for r in range(n):
        row = entries[r]
        if not np.all(np.isfinite(row)):
            report.add(r, "non-finite entry")
            continue
        off = np.delete(row, r)
        if kind is CostKind.EOR:
            if row[r] != 0.0:
                report.add(r, f"diagonal {row[r]!r} != 0")
            if np.any(row < 0):
                report.add(r, "negative entry")
            norm = np.abs(row).sum()
            if norm != 0.0 and abs(norm - 1.0) > tol:
                report.add(r, f"row L1 norm {norm:.12g} is neither 1 nor 0")
        else:
            if np.any(off < 0):
                report.add(r, "negative off-diagonal entry")
            if abs(row[r] + off.sum()) > tol * max(1.0, abs(row[r])):
                report.add(r, "diagonal is not the negative off-diagonal sum")
            if row[r] > row.min() + tol:
                report.add(r, "diagonal is not the row minimum")
    return report
