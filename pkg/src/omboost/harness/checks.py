"""Randomised invariant suites behind ``omboost check``."""

from __future__ import annotations

import numpy as np

from ..core import CostKind, edge_masses, validate_cost_matrix
from ..mbbm import OnlineMBBM
from ..olm import AdaboostOLM
from ..online_opt import Hedge
from ..potential import PotentialTable, potential_multinomial
from ..weaklearn import AdversaryStream, EdgeOracleLearner


def _random_state(rng, k, max_votes):
    return [int(v) for v in rng.multinomial(int(rng.integers(0, max_votes + 1)), np.ones(k) / k)]


def check_recurrence(rng, n) -> bool:
    tables = {}
    for _ in range(n):
        k = int(rng.integers(2, 6))
        g = float(rng.choice([0.0, 0.1, 0.3, 0.45]))
        t = tables.setdefault((k, g), PotentialTable(k, g))
        i = int(rng.integers(0, 7))
        r = int(rng.integers(k))
        s = _random_state(rng, k, 6)
        u = edge_masses(k, g, r)
        rhs = 0.0
        for l in range(k):
            v = list(s)
            v[l] += 1
            rhs += u[l] * t.value(r, i, v)
        if abs(t.value(r, i + 1, s) - rhs) > 1e-12:
            return False
        if k <= 4 and abs(t.value(r, i + 1, s) - potential_multinomial(r, i + 1, s, k, g)) > 1e-12:
            return False
    return True


def check_mbbm_matrices(rng, n) -> bool:
    for _ in range(max(1, n // 50)):
        k = int(rng.integers(2, 5))
        N = int(rng.integers(1, 12))
        g = float(rng.choice([0.05, 0.1, 0.3]))
        b = OnlineMBBM([EdgeOracleLearner(i) for i in range(N)], k, g)
        X, y = AdversaryStream(k, g, N, seed=int(rng.integers(1 << 30))).batch(50)
        for x, yy in zip(X, y):
            _, rec = b.predict(x)
            for e in rec.entries:
                if not validate_cost_matrix(e.cost, CostKind.EOR):
                    return False
            b.learn(int(yy))
            if not all(0.0 <= w <= 1.0 for w in rec.weights):
                return False
    return True


def check_olm_matrices(rng, n) -> bool:
    for loss in ("logistic", "exponential", "square_hinge"):
        k = int(rng.integers(2, 6))
        N = int(rng.integers(1, 10))
        b = AdaboostOLM([EdgeOracleLearner(i) for i in range(N)], k, loss, seed=int(rng.integers(1 << 30)))
        X, y = AdversaryStream(k, 0.2, N, seed=int(rng.integers(1 << 30))).batch(max(10, n))
        c = b.variant.half_width()
        for x, yy in zip(X, y):
            _, rec = b.predict(x)
            for C in rec.costs:
                if not validate_cost_matrix(C, CostKind.GRADIENT, tol=1e-9):
                    return False
            b.learn(int(yy))
            if np.any(np.abs(b.alphas) > c):
                return False
        if not np.array_equal(b.hedge.weights, np.exp(-b.hedge.mistakes.astype(float))):
            return False
    return True


def check_hedge(rng, n) -> bool:
    h = Hedge(5)
    m = np.zeros(5, dtype=np.int64)
    for _ in range(n):
        flags = rng.random(5) < 0.5
        h.update(flags)
        m += flags
    return bool(np.array_equal(h.weights, np.exp(-m.astype(float))))


SUITES = {
    "potential recurrence and multinomial cross-check": check_recurrence,
    "OnlineMBBM cost matrices and weights": check_mbbm_matrices,
    "Adaboost.OLM cost matrices, alpha range, Hedge weights": check_olm_matrices,
    "Hedge closed form": check_hedge,
}


def run_checks(seed: int = 0, n: int = 200, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok = True
    for name, fn in SUITES.items():
        passed = fn(rng, n)
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
