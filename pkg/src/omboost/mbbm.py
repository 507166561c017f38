"""OnlineMBBM: boost-by-majority with potential-derived cost matrices."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import CostKind, CostMatrix, argmax_label
from .potential import DEFAULT_MAX_STATES, PotentialEngine, weight_norm_bound
from .weaklearn import WeakLearner

WEIGHT_SCALINGS = ("trivial", "bound", "running_max")


class LearnerError(RuntimeError):
    def __init__(self, index: int, exc: Exception):
        super().__init__(f"weak learner {index + 1} failed: {exc!r}")
        self.index = index


@dataclass
class _StateEntry:
    cost: CostMatrix
    row_weights: np.ndarray   # unnormalised weight of each row r
    mode: str


@dataclass
class RoundRecord:
    t: int
    x: object
    predictions: list = field(default_factory=list)
    votes: np.ndarray | None = None
    y_hat: int = 0
    y: int | None = None
    raw_weights: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    entries: list = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps({
            "t": self.t,
            "y": None if self.y is None else self.y + 1,
            "y_hat": self.y_hat + 1,
            "l": [p + 1 for p in self.predictions],
            "w": [round(float(w), 12) for w in self.raw_weights],
            "modes": sorted(set(self.modes)),
        })


class OnlineMBBM:
    """Simple-majority online booster whose cost matrices come from potentials.

    ``gamma`` is the edge assumed for every learner.  Delivered example
    weights are the potential-based weights divided by a scale chosen by
    ``weight_scaling``: ``"trivial"`` divides by k, ``"bound"`` by the
    weight-norm bound min(k, c k^2.5 / sqrt(N - i)), ``"running_max"`` by the
    largest weight seen so far for that learner.
    """

    def __init__(self, learners: list[WeakLearner], k: int, gamma: float, *,
                 weight_scaling: str = "trivial", c: float = 8.0,
                 max_states: int = DEFAULT_MAX_STATES, mc_samples: int = 2000,
                 engine: PotentialEngine | None = None, seed: int = 0, audit=None,
                 cache: dict | None = None):
        if not learners:
            raise ValueError("need at least one weak learner")
        if not 0.0 < gamma < 0.5:
            raise ValueError(f"OnlineMBBM needs an edge in (0, 0.5), got {gamma}")
        if weight_scaling not in WEIGHT_SCALINGS:
            raise ValueError(f"weight_scaling must be one of {WEIGHT_SCALINGS}")
        self.learners = list(learners)
        self.N = len(self.learners)
        self.k = k
        self.gamma = gamma
        self.weight_scaling = weight_scaling
        self.c = c
        self.seed = seed
        self.engine = engine if engine is not None else PotentialEngine(
            k, gamma, max_states=max_states, mc_samples=mc_samples)
        if self.engine.k != k or self.engine.gamma != gamma:
            raise ValueError("potential engine parameters do not match the booster")
        self.audit = audit
        self.t = 0
        self._open: RoundRecord | None = None
        # exact-mode entries are deterministic, so boosters with equal
        # (N, k, gamma) may share one cache
        self._cache: dict[tuple, _StateEntry] = {} if cache is None else cache
        self._running_max = np.zeros(self.N)

    def _state(self, i: int, s: tuple) -> _StateEntry:
        """Cost matrix and row weights for learner ``i`` (1-based) at votes ``s``."""
        key = (i, s)
        entry = self._cache.get(key)
        if entry is not None:
            return entry
        k = self.k
        m = self.N - i
        raw = np.zeros((k, k))
        modes = set()
        for r in range(k):
            mc_seed = (self.seed, self.t, i, r)
            phis = np.empty(k)
            for l in range(k):
                v = list(s)
                v[l] += 1
                phis[l], mode = self.engine.value(r, m, v, mc_seed=mc_seed)
                modes.add(mode)
            raw[r] = np.maximum(phis - phis[r], 0.0)
        row_w = raw.sum(axis=1)
        norm = np.divide(raw, row_w[:, None], out=np.zeros_like(raw), where=row_w[:, None] > 0)
        np.fill_diagonal(norm, 0.0)
        mode = "mc" if "mc" in modes else "exact"
        entry = _StateEntry(CostMatrix(norm, CostKind.EOR), row_w, mode)
        if mode == "exact":
            self._cache[key] = entry
        return entry

    def cost_matrix(self, i: int, s) -> CostMatrix:
        s = tuple(int(v) for v in s)
        if not 1 <= i <= self.N:
            raise ValueError(f"learner index {i} outside [1, {self.N}]")
        if sum(s) != i - 1:
            raise ValueError(f"vote vector must hold {i - 1} votes, has {sum(s)}")
        return self._state(i, s).cost

    def predict(self, x) -> tuple[int, RoundRecord]:
        if self._open is not None:
            raise RuntimeError("previous round was not closed with learn()")
        self.t += 1
        rec = RoundRecord(t=self.t, x=x)
        s = [0] * self.k
        for i, wl in enumerate(self.learners, start=1):
            entry = self._state(i, tuple(s))
            rec.entries.append(entry)
            rec.modes.append(entry.mode)
            try:
                wl.receive_cost_matrix(entry.cost)
                l = int(wl.predict(x))
            except Exception as exc:
                raise LearnerError(i - 1, exc) from exc
            if not 0 <= l < self.k:
                raise LearnerError(i - 1, ValueError(f"predicted label {l} outside [0, {self.k})"))
            rec.predictions.append(l)
            s[l] += 1
        rec.votes = np.array(s)
        rec.y_hat = argmax_label(s)
        self._open = rec
        return rec.y_hat, rec

    def _scale(self, i: int, w: float) -> float:
        if self.weight_scaling == "trivial":
            d = float(self.k)
        elif self.weight_scaling == "bound":
            d = weight_norm_bound(self.k, self.gamma, self.N, i, self.c)
        else:
            self._running_max[i - 1] = max(self._running_max[i - 1], w)
            d = self._running_max[i - 1]
        if d <= 0.0:
            return 0.0
        return min(1.0, max(0.0, w / d))

    def learn(self, y: int, record: RoundRecord | None = None) -> None:
        rec = self._open
        if rec is None:
            raise RuntimeError("learn() called without an open round")
        if record is not None and record is not rec:
            raise RuntimeError("record does not belong to the open round")
        rec.y = int(y)
        for i, (wl, entry) in enumerate(zip(self.learners, rec.entries), start=1):
            w = float(entry.row_weights[y])
            rec.raw_weights.append(w)
            scaled = self._scale(i, w)
            rec.weights.append(scaled)
            try:
                wl.learn(rec.x, y, scaled)
            except Exception as exc:
                raise LearnerError(i - 1, exc) from exc
        self._open = None
        if self.audit is not None:
            self.audit.write(rec.to_json() + "\n")


def mbbm_cost_matrix(booster: OnlineMBBM, i: int, s) -> CostMatrix:
    return booster.cost_matrix(i, s)


def mbbm_predict(booster: OnlineMBBM, x):
    return booster.predict(x)


def mbbm_learn(booster: OnlineMBBM, y: int, record: RoundRecord | None = None) -> None:
    booster.learn(y, record)
