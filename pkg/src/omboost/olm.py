"""Adaboost.OLM: adaptive online boosting with surrogate-loss cost matrices."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import CostKind, CostMatrix, argmax_label
from .mbbm import LearnerError
from .online_opt import Hedge, OnlineGradientDescent
from .weaklearn import WeakLearner


class LossVariant:
    """Surrogate loss L^r(s) with its cost rule, OGD gradient and step schedule.

    Subclasses set ``name`` and implement ``pairwise`` (the derivative of one
    summand with respect to ``s[l] - s[r]``) plus ``loss``.  Learner indices
    ``i`` are 1-based.
    """

    name = ""

    def __init__(self, k: int, N: int):
        if k < 2:
            raise ValueError("k must be >= 2")
        self.k = k
        self.N = N

    def loss(self, r: int, s) -> float:
        raise NotImplementedError

    def pairwise(self, z):
        raise NotImplementedError

    def cost_matrix(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        C = self.pairwise(s[None, :] - s[:, None])
        d = np.arange(self.k)
        C[d, d] = 0.0
        C[d, d] = -C.sum(axis=1)
        return C

    def gradient(self, alpha: float, s, l: int, y: int) -> float:
        """d/dα of L^y(s + α e_l)."""
        s = np.asarray(s, dtype=float)
        if l != y:
            return float(self.pairwise(s[l] + alpha - s[y]))
        # sum over j != y: drop the j == y term, whose argument is -alpha
        z = s - alpha - s[y]
        return -float(np.sum(self.pairwise(z)) - self.pairwise(-alpha))

    def half_width(self) -> float:
        return 2.0

    def rate(self, t: int, i: int) -> float:
        return 2.0 * math.sqrt(2.0) / ((self.k - 1) * math.sqrt(t))

    def weight_normalizer(self, i: int) -> float:
        return float(self.k - 1)


class LogisticLoss(LossVariant):
    name = "logistic"

    def loss(self, r, s):
        s = np.asarray(s, dtype=float)
        return float(np.sum(np.logaddexp(0.0, np.delete(s, r) - s[r])))

    def pairwise(self, z):
        return expit(z)


class ExponentialLoss(LossVariant):
    name = "exponential"

    def loss(self, r, s):
        s = np.asarray(s, dtype=float)
        return float(np.sum(np.exp(np.delete(s, r) - s[r])))

    def pairwise(self, z):
        return np.exp(z)

    def rate(self, t, i):
        return super().rate(t, i) * math.exp(-i)

    def weight_normalizer(self, i):
        # i-1 earlier votes of size <= 2 bound every s[l]-s[y] by 2(i-1)
        return (self.k - 1) * math.exp(2.0 * i)


class SquareHingeLoss(LossVariant):
    name = "square_hinge"

    def __init__(self, k: int, N: int):
        super().__init__(k, N)
        self.c = 1.0 / math.sqrt(N)

    def loss(self, r, s):
        s = np.asarray(s, dtype=float)
        h = np.maximum(np.delete(s, r) - s[r] + 1.0, 0.0)
        return float(0.5 * np.sum(h * h))

    def pairwise(self, z):
        return np.maximum(np.asarray(z, dtype=float) + 1.0, 0.0)

    def half_width(self):
        return self.c

    def rate(self, t, i):
        return math.sqrt(2.0) * self.c / ((self.k - 1 + self.c * self.N) * math.sqrt(t))

    def weight_normalizer(self, i):
        return (self.k - 1) * (1.0 + 2.0 * self.c * i)


LOSS_VARIANTS = {cls.name: cls for cls in (LogisticLoss, ExponentialLoss, SquareHingeLoss)}


def make_loss(name: str, k: int, N: int) -> LossVariant:
    try:
        return LOSS_VARIANTS[name](k, N)
    except KeyError:
        raise ValueError(f"unknown loss variant {name!r}; choose from {sorted(LOSS_VARIANTS)}") from None


def olm_loss(variant: LossVariant, r: int, s) -> float:
    return variant.loss(r, s)


def olm_cost_matrix(variant: LossVariant, s) -> CostMatrix:
    return CostMatrix(variant.cost_matrix(s), CostKind.GRADIENT)


def olm_gradient(variant: LossVariant, alpha: float, s, l: int, y: int) -> float:
    return variant.gradient(alpha, s, l, y)


@dataclass
class OlmRound:
    t: int
    x: object
    predictions: list = field(default_factory=list)
    prefixes: list = field(default_factory=list, repr=False)   # s^{i-1}
    costs: list = field(default_factory=list, repr=False)
    expert_preds: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    chosen: int = 0
    y_hat: int = 0
    y: int | None = None


class AdaboostOLM:
    """Weighted-vote online booster with per-learner OGD weights and Hedge over experts.

    Expert i is the argmax of the weighted votes of learners 1..i.  Each
    round one expert is drawn with probability proportional to
    ``exp(-mistakes)`` and its label is the booster's prediction.
    """

    def __init__(self, learners: list[WeakLearner], k: int, loss: str | LossVariant = "logistic",
                 seed=0, audit=None):
        if not learners:
            raise ValueError("need at least one weak learner")
        self.learners = list(learners)
        self.N = len(self.learners)
        self.k = k
        self.variant = loss if isinstance(loss, LossVariant) else make_loss(loss, k, self.N)
        c = self.variant.half_width()
        self.ogd = [OnlineGradientDescent(c=c, rate=self._rate_for(i))
                    for i in range(1, self.N + 1)]
        self.hedge = Hedge(self.N)
        self.rng = np.random.default_rng(seed)
        self.edge_num = np.zeros(self.N)
        self.edge_den = np.zeros(self.N)
        self.audit = audit
        self.t = 0
        self._open: OlmRound | None = None

    def _rate_for(self, i):
        v = self.variant
        return lambda t: v.rate(t, i)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([o.alpha for o in self.ogd])

    def predict(self, x) -> tuple[int, OlmRound]:
        if self._open is not None:
            raise RuntimeError("previous round was not closed with learn()")
        self.t += 1
        rec = OlmRound(t=self.t, x=x)
        s = np.zeros(self.k)
        for i, (wl, ogd) in enumerate(zip(self.learners, self.ogd)):
            C = self.variant.cost_matrix(s)
            rec.prefixes.append(s.copy())
            rec.costs.append(C)
            try:
                wl.receive_cost_matrix(CostMatrix(C, CostKind.GRADIENT))
                l = int(wl.predict(x))
            except Exception as exc:
                raise LearnerError(i, exc) from exc
            if not 0 <= l < self.k:
                raise LearnerError(i, ValueError(f"predicted label {l} outside [0, {self.k})"))
            rec.predictions.append(l)
            rec.alphas.append(ogd.alpha)
            s[l] += ogd.alpha
            rec.expert_preds.append(argmax_label(s))
        rec.chosen = self.hedge.sample(self.rng)
        rec.y_hat = rec.expert_preds[rec.chosen]
        self._open = rec
        return rec.y_hat, rec

    def learn(self, y: int, record: OlmRound | None = None) -> None:
        rec = self._open
        if rec is None:
            raise RuntimeError("learn() called without an open round")
        if record is not None and record is not rec:
            raise RuntimeError("record does not belong to the open round")
        y = int(y)
        rec.y = y
        v = self.variant
        for i in range(self.N):
            s, C, l = rec.prefixes[i], rec.costs[i], rec.predictions[i]
            ogd = self.ogd[i]
            ogd.step(v.gradient(ogd.alpha, s, l, y))
            w = min(1.0, max(0.0, -C[y, y] / v.weight_normalizer(i + 1)))
            self.edge_num[i] += C[y, l]
            self.edge_den[i] += C[y, y]
            try:
                self.learners[i].learn(rec.x, y, w)
            except Exception as exc:
                raise LearnerError(i, exc) from exc
        self.hedge.update(np.asarray(rec.expert_preds) != y)
        self._open = None
        if self.audit is not None:
            self.audit.write(self._audit_line(rec) + "\n")

    def empirical_edges(self) -> list[float | None]:
        """Per-learner empirical edge; ``None`` where no cost has accrued."""
        return [None if d == 0.0 else float(n / d) for n, d in zip(self.edge_num, self.edge_den)]

    def _audit_line(self, rec: OlmRound) -> str:
        return json.dumps({
            "t": rec.t,
            "y": rec.y + 1,
            "y_hat": rec.y_hat + 1,
            "i_t": rec.chosen + 1,
            "experts": [p + 1 for p in rec.expert_preds],
            "alpha": [round(float(a), 12) for a in rec.alphas],
            "edge": [None if g is None else round(g, 12) for g in self.empirical_edges()],
        })


def olm_predict(booster: AdaboostOLM, x):
    return booster.predict(x)


def olm_learn(booster: AdaboostOLM, y: int, record: OlmRound | None = None) -> None:
    booster.learn(y, record)


def empirical_edges(booster: AdaboostOLM) -> list[float | None]:
    return booster.empirical_edges()
