"""Online convex optimisation and expert-advice primitives."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np


def logistic_rate(k: int) -> Callable[[int], float]:
    base = 2.0 * math.sqrt(2.0) / (k - 1)
    return lambda t: base / math.sqrt(t)


class OnlineGradientDescent:
    """Projected OGD on the interval ``[-c, c]`` with rate ``eta(t)``, t 1-based."""

    def __init__(self, c: float = 2.0, rate: Callable[[int], float] | None = None,
                 k: int = 2, alpha: float = 0.0):
        if c <= 0:
            raise ValueError("half-width must be positive")
        self.c = float(c)
        self.rate = rate if rate is not None else logistic_rate(k)
        self.alpha = min(self.c, max(-self.c, float(alpha)))
        self.t = 0

    def step(self, gradient: float) -> float:
        if not math.isfinite(gradient):
            raise ValueError(f"non-finite gradient {gradient!r}")
        self.t += 1
        a = self.alpha - self.rate(self.t) * gradient
        self.alpha = min(self.c, max(-self.c, a))
        return self.alpha


def ogd_step(state: OnlineGradientDescent, gradient: float) -> OnlineGradientDescent:
    state.step(gradient)
    return state


class Hedge:
    """Exponential weights with unit rate: each mistake multiplies a weight by e^-1.

    Weights are kept as log-weights (minus the mistake count), so ``weights``
    is ``exp(-mistakes)`` exactly and nothing underflows during sampling.
    """

    def __init__(self, n: int, rate: float = 1.0):
        if n < 1:
            raise ValueError("need at least one expert")
        self.rate = rate
        self.mistakes = np.zeros(n, dtype=np.int64)
        self.log_w = np.zeros(n)

    @property
    def n(self) -> int:
        return len(self.log_w)

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_w)

    def probabilities(self) -> np.ndarray:
        z = np.exp(self.log_w - self.log_w.max())
        return z / z.sum()

    def sample(self, rng: np.random.Generator) -> int:
        # always consume exactly one uniform so streams stay seed-aligned
        u = rng.random()
        cdf = np.cumsum(self.probabilities())
        return int(min(np.searchsorted(cdf, u * cdf[-1], side="right"), self.n - 1))

    def update(self, mistakes) -> None:
        m = np.asarray(mistakes, dtype=bool)
        if m.shape != self.log_w.shape:
            raise ValueError(f"expected {self.n} mistake flags, got {m.shape}")
        self.mistakes += m
        self.log_w = -self.rate * self.mistakes.astype(float)


def hedge_sample(state: Hedge, rng: np.random.Generator) -> int:
    return state.sample(rng)


def hedge_update(state: Hedge, mistakes) -> Hedge:
    state.update(mistakes)
    return state


class LEA:
    """Learning with expert advice over eor cost matrices with a known horizon."""

    def __init__(self, n_experts: int, horizon: int):
        if n_experts < 1 or horizon < 1:
            raise ValueError("need n_experts >= 1 and horizon >= 1")
        self.n = n_experts
        self.horizon = horizon
        self.eta = math.sqrt(8.0 * math.log(n_experts) / horizon)
        self.costs = np.zeros(n_experts)
        self.t = 0

    def choose(self, rng: np.random.Generator) -> int:
        if self.t >= self.horizon:
            raise RuntimeError(f"LEA horizon {self.horizon} exhausted")
        z = -self.eta * self.costs
        p = np.exp(z - z.max())
        cdf = np.cumsum(p)
        u = rng.random()
        return int(min(np.searchsorted(cdf, u * cdf[-1], side="right"), self.n - 1))

    def update(self, advice, w: float, C, y: int) -> None:
        C = np.asarray(getattr(C, "entries", C))
        self.costs += w * C[y, np.asarray(advice)]
        self.t += 1

    def round(self, advice, w: float, C, y: int, rng: np.random.Generator) -> int:
        if len(advice) != self.n:
            raise ValueError(f"expected {self.n} advice labels, got {len(advice)}")
        i = self.choose(rng)
        pred = int(advice[i])
        self.update(advice, w, C, y)
        return pred


def lea_round(state: LEA, advice, w, C, y, rng) -> int:
    return state.round(advice, w, C, y, rng)


class DoublingLEA:
    """LEA for open-ended streams: restart with doubled horizon when one runs out."""

    def __init__(self, n_experts: int, first_horizon: int = 1):
        self.n = n_experts
        self._horizon = first_horizon
        self._inner = LEA(n_experts, first_horizon)

    def round(self, advice, w, C, y, rng) -> int:
        if self._inner.t >= self._inner.horizon:
            self._horizon *= 2
            self._inner = LEA(self.n, self._horizon)
        return self._inner.round(advice, w, C, y, rng)
