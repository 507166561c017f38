"""Edge-over-random potentials for the multiclass 0-1 loss.

``phi(r, i, s)`` is the probability that label ``r`` fails to be the strict
winner of the vote vector ``s`` after ``i`` further votes drawn i.i.d. from
the edge-over-random distribution favouring ``r``.  Ties count as losses.
"""

from __future__ import annotations

import csv
import math
import sys
import threading
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .core import edge_masses

DEFAULT_MAX_STATES = 10**7


class PotentialResourceError(RuntimeError):
    """The exact DP would need more memo entries than the configured cap."""


def zero_one_loss(r: int, s) -> int:
    s = np.asarray(s)
    others = np.delete(s, r)
    return int(others.max() >= s[r])


def _check_query(r, i, s, k, gamma):
    if i < 0:
        raise ValueError(f"remaining learners must be >= 0, got {i}")
    if not 0.0 <= gamma < 0.5:
        raise ValueError(f"edge must lie in [0, 0.5), got {gamma}")
    if len(s) != k:
        raise ValueError(f"vote vector has {len(s)} entries, expected {k}")
    if not 0 <= r < k:
        raise ValueError(f"label {r} outside [0, {k})")


@dataclass(frozen=True)
class PotentialQuery:
    r: int
    i: int
    s: tuple
    k: int
    gamma: float

    def __post_init__(self):
        _check_query(self.r, self.i, self.s, self.k, self.gamma)


def gap_key(r: int, i: int, s) -> tuple | float:
    """Canonical memo key ``(i, sorted gaps)`` or the decided value 0.0/1.0.

    A gap ``s[r] - s[l]`` above ``i`` can never close, so it is clipped to
    ``i + 1``; a gap at or below ``-i`` can never open, so the loss is certain.
    """
    sr = s[r]
    gaps = []
    for l, v in enumerate(s):
        if l == r:
            continue
        d = sr - v
        if d <= -i:
            return 1.0
        gaps.append(d if d <= i else i + 1)
    if min(gaps) > i:
        return 0.0
    gaps.sort()
    return (i, tuple(gaps))


class PotentialTable:
    """Memoised exact potentials for one ``(k, gamma)`` pair.

    Values are computed from the one-step recurrence on gap vectors.  Reads
    are lock-free; inserts happen under a lock and are idempotent, so several
    boosters can share a table.
    """

    def __init__(self, k: int, gamma: float, max_states: int = DEFAULT_MAX_STATES):
        if k < 2:
            raise ValueError("k must be >= 2")
        if not 0.0 <= gamma < 0.5:
            raise ValueError(f"edge must lie in [0, 0.5), got {gamma}")
        self.k = k
        self.gamma = gamma
        self.max_states = max_states
        u = edge_masses(k, gamma, 0)
        self.p_fav = float(u[0])
        self.p_other = float(u[1])
        self.memo: dict[tuple, float] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.memo)

    def value(self, r: int, i: int, s) -> float:
        _check_query(r, i, s, self.k, self.gamma)
        key = gap_key(r, i, [int(v) for v in s])
        if not isinstance(key, tuple):
            return key
        return self._lookup(key)

    def _lookup(self, key) -> float:
        v = self.memo.get(key)
        if v is not None:
            return v
        limit = sys.getrecursionlimit()
        if limit < 4 * key[0] + 200:
            sys.setrecursionlimit(4 * key[0] + 200)
        return self._compute(key)

    def _compute(self, key) -> float:
        memo = self.memo
        v = memo.get(key)
        if v is not None:
            return v
        i, gaps = key
        if i == 0:
            v = 1.0 if gaps[0] <= 0 else 0.0
        else:
            j = i - 1
            # favoured label drawn: every gap widens by one
            up = self._child(j, tuple(g + 1 for g in gaps))
            total = self.p_fav * up
            # a non-favoured label drawn: its gap shrinks by one; equal gaps
            # give the same child, so each distinct gap is visited once
            prev = None
            for idx, g in enumerate(gaps):
                if g == prev:
                    continue
                prev = g
                mult = gaps.count(g)
                child = gaps[:idx] + (g - 1,) + gaps[idx + 1:]
                total += mult * self.p_other * self._child(j, child)
            v = min(1.0, max(0.0, total))
        if len(memo) >= self.max_states:
            raise PotentialResourceError(
                f"potential memo exceeded {self.max_states} entries (k={self.k})")
        with self._lock:
            memo.setdefault(key, v)
        return v

    def _child(self, j: int, gaps: tuple) -> float:
        lo = gaps[0]
        if lo <= -j:
            return 1.0
        if lo > j:
            return 0.0
        if gaps[-1] > j + 1:
            gaps = tuple(g if g <= j else j + 1 for g in gaps)
            # clipping keeps the order because it is monotone
        return self._compute((j, gaps))

    def items(self):
        return list(self.memo.items())


def potential_exact(r: int, i: int, s, k: int, gamma: float,
                    table: PotentialTable | None = None) -> float:
    if table is None:
        table = PotentialTable(k, gamma)
    elif table.k != k or table.gamma != gamma:
        raise ValueError("table parameters do not match the query")
    return table.value(r, i, s)


def _capped_uniform_prob(n: int, m: int, caps) -> float:
    """P(every cell count <= its cap) for ``n`` balls thrown uniformly into ``m`` cells."""
    if min(caps) < 0:
        return 0.0
    # f[n'] = P(last cells within caps | n' balls among them)
    f = (np.arange(n + 1) <= caps[-1]).astype(float)
    for j in range(m - 2, -1, -1):
        cells = m - j
        p = 1.0 / cells
        cap = caps[j]
        g = np.zeros(n + 1)
        for nn in range(n + 1):
            a = np.arange(min(cap, nn) + 1)
            g[nn] = np.dot(binom.pmf(a, nn, p), f[nn - a])
        f = g
    return float(f[n])


def potential_multinomial(r: int, i: int, s, k: int, gamma: float) -> float:
    """The closed multinomial-sum form of the potential.

    One minus the probability mass of all count vectors under which ``r``
    ends as strict winner, organised by the count of ``r`` so the remaining
    draws are uniform over the other labels.  Independent of the recurrence
    in :class:`PotentialTable` and used to cross-check it.
    """
    _check_query(r, i, s, k, gamma)
    s = [int(v) for v in s]
    u = edge_masses(k, gamma, r)
    others = [l for l in range(k) if l != r]
    win = 0.0
    for x in range(i + 1):
        caps = [x + s[r] - s[l] - 1 for l in others]
        if min(caps) < 0:
            continue
        pr = binom.pmf(x, i, u[r])
        if pr == 0.0:
            continue
        win += pr * _capped_uniform_prob(i - x, k - 1, caps)
    return float(min(1.0, max(0.0, 1.0 - win)))


def potential_mc(r: int, i: int, s, k: int, gamma: float, n_samples: int,
                 seed=None) -> tuple[float, float]:
    """Monte Carlo estimate of the potential and its standard error."""
    _check_query(r, i, s, k, gamma)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    s = np.asarray(s, dtype=np.int64)
    if i == 0:
        return float(zero_one_loss(r, s)), 0.0
    rng = np.random.default_rng(seed)
    u = edge_masses(k, gamma, r)
    final = rng.multinomial(i, u, size=n_samples) + s
    mine = final[:, r].copy()
    final[:, r] = np.iinfo(np.int64).min
    loss = (final.max(axis=1) >= mine).astype(float)
    est = float(loss.mean())
    se = float(loss.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return est, se


def asymptotic_error_bound(k: int, gamma: float, N: int) -> float:
    """Hoeffding/union bound on the final error of N independent edge-gamma votes."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"edge must lie in [0, 1), got {gamma}")
    if N < 1:
        raise ValueError("N must be >= 1")
    return (k - 1) * math.exp(-gamma * gamma * N / 2.0)


def weight_norm_bound(k: int, gamma: float, N: int, i: int, c: float = 8.0) -> float:
    """Upper bound on the largest booster weight handed to learner ``i`` (1-based)."""
    if not 1 <= i <= N:
        raise ValueError(f"learner index {i} outside [1, {N}]")
    if not 0.0 <= gamma < 0.5:
        raise ValueError(f"edge must lie in [0, 0.5), got {gamma}")
    if i == N:
        return float(k)
    return min(float(k), c * k**2.5 / math.sqrt(N - i))


def estimated_states(k: int, i: int) -> int:
    """Rough upper bound on memo entries needed for queries with ``i`` votes left."""
    return math.comb(i + k, k)


class PotentialEngine:
    """Exact potentials when the DP fits under the cap, Monte Carlo otherwise."""

    def __init__(self, k: int, gamma: float, max_states: int = DEFAULT_MAX_STATES,
                 mc_samples: int = 2000, table: PotentialTable | None = None):
        self.k = k
        self.gamma = gamma
        self.mc_samples = mc_samples
        self.table = table if table is not None else PotentialTable(k, gamma, max_states)
        self.exact_ok = True

    def mode_for(self, i: int) -> str:
        if self.exact_ok and estimated_states(self.k, i) <= self.table.max_states:
            return "exact"
        return "mc"

    def value(self, r: int, i: int, s, mc_seed=None) -> tuple[float, str]:
        if self.mode_for(i) == "exact":
            try:
                return self.table.value(r, i, s), "exact"
            except PotentialResourceError:
                self.exact_ok = False
        est, _ = potential_mc(r, i, s, self.k, self.gamma, self.mc_samples, seed=mc_seed)
        return est, "mc"


def export_table(table: PotentialTable, path) -> int:
    """Write memo rows ``k, gamma, i, gap_1..gap_{k-1}, value`` to CSV."""
    rows = sorted(table.items())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "gamma", "i"] + [f"gap_{j + 1}" for j in range(table.k - 1)] + ["value"])
        for (i, gaps), v in rows:
            w.writerow([table.k, repr(table.gamma), i, *gaps, repr(v)])
    return len(rows)
