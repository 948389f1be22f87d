"""Normal fits, histograms, chi-square independence and difference of proportions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

_EPS = 1e-10
_MAX_ITER = 10_000


@dataclass(frozen=True)
class NormalFit:
    mean: float
    std: float  # population convention (divisor N)


def normal_fit(values) -> NormalFit:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("normal_fit needs at least one value")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    return NormalFit(float(v.mean()), float(v.std()))


def histogram(values, bin_width: float, origin: float = 0.0) -> dict[int, int]:
    """Counts keyed by bin index ``floor((v - origin) / bin_width)``, ascending."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    idx = np.floor((np.asarray(values, dtype=np.float64) - origin) / bin_width).astype(int)
    keys, counts = np.unique(idx, return_counts=True)
    return {int(k): int(c) for k, c in zip(keys, counts)}


def _gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by its power series."""
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_continued_fraction(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by modified Lentz."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x)."""
    if a <= 0 or x < 0:
        raise ValueError("need a > 0 and x >= 0")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x)
    return _gamma_continued_fraction(a, x)


def chi2_sf(statistic: float, dof: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    return gamma_q(dof / 2.0, statistic / 2.0)


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] < 2 or counts.shape[1] < 2:
            raise ValueError("contingency table must be at least 2x2")
        if np.any(counts < 0) or counts.sum() == 0:
            raise ValueError("counts must be non-negative with a positive total")
        if not np.array_equal(counts, np.asarray(self.counts)):
            raise ValueError("counts must be integers")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        rows = tuple(self.row_labels) or tuple(f"r{i}" for i in range(counts.shape[0]))
        cols = tuple(self.col_labels) or tuple(f"c{j}" for j in range(counts.shape[1]))
        if len(rows) != counts.shape[0] or len(cols) != counts.shape[1]:
            raise ValueError("label count does not match table shape")
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def total(self) -> int:
        return int(self.counts.sum())


def as_table(table) -> ContingencyTable:
    return table if isinstance(table, ContingencyTable) else ContingencyTable(table)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float


def chi_square_independence(table) -> ChiSquareResult:
    """Pearson chi-square test of independence, no continuity correction."""
    t = as_table(table)
    obs = t.counts.astype(np.float64)
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        raise ValueError("zero marginal total: expected count would be 0")
    expected = np.outer(rows, cols) / obs.sum()
    statistic = float(np.sum((obs - expected) ** 2 / expected))
    dof = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return ChiSquareResult(statistic, dof, chi2_sf(statistic, dof))


def diff_proportions(table) -> float:
    """p1 - p2 where p_i is the share of row i falling in the first column."""
    t = as_table(table)
    if t.shape != (2, 2):
        raise ValueError("difference of proportions needs a 2x2 table")
    c = t.counts
    rows = c.sum(axis=1)
    if np.any(rows == 0):
        raise ValueError("zero row total")
    return float(c[0, 0] / rows[0] - c[1, 0] / rows[1])


def drop_empty(table: ContingencyTable) -> ContingencyTable:
    """Remove all-zero rows and columns so margins are positive."""
    c = table.counts
    r_keep = c.sum(axis=1) > 0
    c_keep = c.sum(axis=0) > 0
    return ContingencyTable(
        c[r_keep][:, c_keep],
        tuple(l for l, k in zip(table.row_labels, r_keep) if k),
        tuple(l for l, k in zip(table.col_labels, c_keep) if k),
    )


def collapse_columns(table: ContingencyTable, groups: Sequence[Sequence[int]], labels: Sequence[str]) -> ContingencyTable:
    cols = [table.counts[:, list(g)].sum(axis=1) for g in groups]
    return ContingencyTable(np.column_stack(cols), table.row_labels, tuple(labels))
