"""Online weak learners and the adversarial streams used to probe boosters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CostKind, Example, validate_cost_matrix


class WeakLearner:
    """Per-round protocol: ``receive_cost_matrix``, then ``predict``, then ``learn``.

    ``predict`` must not change learner state; only ``learn`` does.
    """

    cost_matrix = None

    def receive_cost_matrix(self, C) -> None:
        self.cost_matrix = C

    def predict(self, x) -> int:
        raise NotImplementedError

    def learn(self, x, y: int, w: float = 1.0) -> None:
        raise NotImplementedError


class OnlineStump(WeakLearner):
    """Depth-one tree grown from streaming per-feature class histograms.

    Each feature keeps at most ``n_bins`` value centroids with per-class
    weighted mass; when a new value would exceed the budget the two closest
    centroids merge.  Every ``refresh_period`` updates the split with the
    smallest weighted 0-1 impurity over all centroid midpoints is adopted.
    """

    def __init__(self, k: int, n_bins: int = 32, refresh_period: int = 50):
        if n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if refresh_period < 1:
            raise ValueError("refresh_period must be >= 1")
        self.k = k
        self.n_bins = n_bins
        self.refresh_period = refresh_period
        self.n_updates = 0
        self.centers = None
        self.mass = None
        self.n_used = None
        # (feature, threshold, left label, right label); feature -1 means constant
        self.rule = (-1, 0.0, 0, 0)

    @classmethod
    def random(cls, k: int, rng: np.random.Generator, refresh_range=(5, 50), n_bins: int = 32):
        lo, hi = refresh_range
        return cls(k, n_bins=n_bins, refresh_period=int(rng.integers(lo, hi + 1)))

    @property
    def hyperparameters(self) -> dict:
        return {"n_bins": self.n_bins, "refresh_period": self.refresh_period}

    def _init(self, d: int):
        cap = self.n_bins + 1
        self.centers = np.full((d, cap), np.inf)
        self.mass = np.zeros((d, cap, self.k))
        self.n_used = np.zeros(d, dtype=np.int64)
        self._rows = np.arange(d)

    def predict(self, x) -> int:
        f, thr, left, right = self.rule
        if f < 0:
            return left
        return left if x[f] <= thr else right

    def learn(self, x, y: int, w: float = 1.0) -> None:
        if w <= 0.0:
            return
        x = np.asarray(x, dtype=float)
        if self.centers is None:
            self._init(x.shape[0])
        elif x.shape[0] != self.centers.shape[0]:
            raise ValueError(f"feature dimension changed from {self.centers.shape[0]} to {x.shape[0]}")
        eq = self.centers == x[:, None]
        pos = eq.argmax(axis=1)
        hit = eq[self._rows, pos]
        if hit.all():
            self.mass[self._rows, pos, y] += w
        else:
            hits = np.flatnonzero(hit)
            self.mass[hits, pos[hits], y] += w
            for f in np.flatnonzero(~hit):
                self._insert(int(f), float(x[f]), y, w)
        self.n_updates += 1
        if self.n_updates == 1 or self.n_updates % self.refresh_period == 0:
            self._refresh()

    def _insert(self, f: int, v: float, y: int, w: float):
        n = self.n_used[f]
        c = self.centers[f]
        m = self.mass[f]
        j = int(np.searchsorted(c[:n], v))
        c[j + 1:n + 1] = c[j:n].copy()
        m[j + 1:n + 1] = m[j:n].copy()
        c[j] = v
        m[j] = 0.0
        m[j, y] = w
        n += 1
        if n > self.n_bins:
            gaps = np.diff(c[:n])
            a = int(np.argmin(gaps))
            wa, wb = m[a].sum(), m[a + 1].sum()
            tot = wa + wb
            c[a] = (c[a] * wa + c[a + 1] * wb) / tot if tot > 0 else 0.5 * (c[a] + c[a + 1])
            m[a] += m[a + 1]
            c[a + 1:n - 1] = c[a + 2:n].copy()
            m[a + 1:n - 1] = m[a + 2:n].copy()
            n -= 1
            c[n] = np.inf
            m[n] = 0.0
        self.n_used[f] = n

    def _refresh(self):
        cum = np.cumsum(self.mass, axis=1)
        total = cum[0, -1]
        left = cum[:, :-1, :]
        right = total - left
        err = (left.sum(-1) - left.max(-1)) + (right.sum(-1) - right.max(-1))
        valid = np.arange(err.shape[1])[None, :] < (self.n_used[:, None] - 1)
        err = np.where(valid, err, np.inf)
        flat = int(np.argmin(err))
        f, j = divmod(flat, err.shape[1])
        base_err = total.sum() - total.max()
        if not np.isfinite(err[f, j]) or err[f, j] >= base_err:
            self.rule = (-1, 0.0, int(np.argmax(total)), int(np.argmax(total)))
            return
        thr = 0.5 * (self.centers[f, j] + self.centers[f, j + 1])
        self.rule = (int(f), float(thr), int(np.argmax(left[f, j])), int(np.argmax(right[f, j])))


class OnlineNaiveBayes(WeakLearner):
    """Gaussian naive Bayes with importance-weighted sufficient statistics."""

    def __init__(self, k: int, var_floor: float = 1e-6, prior_smoothing: float = 1.0):
        self.k = k
        self.var_floor = var_floor
        self.prior_smoothing = prior_smoothing
        self.counts = np.zeros(k)
        self.mean = None
        self.m2 = None

    @property
    def hyperparameters(self) -> dict:
        return {"var_floor": self.var_floor}

    def priors(self) -> np.ndarray:
        a = self.prior_smoothing
        return (self.counts + a) / (self.counts.sum() + a * self.k)

    def variances(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            v = self.m2 / self.counts[:, None]
        v = np.where(self.counts[:, None] > 0, v, 1.0)
        return np.maximum(v, self.var_floor)

    def predict(self, x) -> int:
        if self.mean is None:
            return 0
        x = np.asarray(x, dtype=float)
        var = self.variances()
        ll = -0.5 * (np.log(2 * np.pi * var) + (x - self.mean) ** 2 / var).sum(axis=1)
        ll = np.where(self.counts > 0, ll, 0.0)
        return int(np.argmax(np.log(self.priors()) + ll))

    def learn(self, x, y: int, w: float = 1.0) -> None:
        if w <= 0.0:
            return
        x = np.asarray(x, dtype=float)
        if self.mean is None:
            self.mean = np.zeros((self.k, x.shape[0]))
            self.m2 = np.zeros((self.k, x.shape[0]))
        # weighted Welford update for class y
        n_new = self.counts[y] + w
        delta = x - self.mean[y]
        self.mean[y] += (w / n_new) * delta
        self.m2[y] += w * delta * (x - self.mean[y])
        self.counts[y] = n_new


class EdgeOracleLearner(WeakLearner):
    """Votes for the label stored in coordinate ``index`` of the example."""

    def __init__(self, index: int):
        self.index = index

    def predict(self, x) -> int:
        if not 0 <= self.index < len(x):
            raise IndexError(f"oracle index {self.index} outside example of length {len(x)}")
        return int(x[self.index])

    def learn(self, x, y: int, w: float = 1.0) -> None:
        pass


def oracle_predict(learner: EdgeOracleLearner, x) -> int:
    return learner.predict(x)


class AdversaryStream:
    """Labels uniform on [k]; N label-valued coordinates drawn i.i.d. given the label.

    ``constant_edge`` plants ``gamma`` in every round.  ``two_phase`` is the
    lower-bound schedule: pure noise for ``t <= T0`` and edge ``2 * gamma``
    afterwards, with ``T0 = k * S / (4 * gamma)`` unless given explicitly.
    """

    MODES = ("constant_edge", "two_phase")

    def __init__(self, k: int, gamma: float, N: int, mode: str = "constant_edge",
                 T0: float | None = None, S: float | None = None, seed=None, block: int = 4096):
        if mode not in self.MODES:
            raise ValueError(f"unknown adversary mode {mode!r}")
        if k < 2 or N < 1:
            raise ValueError("need k >= 2 and N >= 1")
        self.k, self.gamma, self.N, self.mode = k, float(gamma), N, mode
        if mode == "two_phase":
            if T0 is None:
                if S is None or gamma <= 0:
                    raise ValueError("two_phase needs T0, or S with gamma > 0")
                T0 = k * S / (4.0 * gamma)
            if not 0 <= 2 * gamma < 1:
                raise ValueError("two_phase needs 2*gamma in [0, 1)")
        elif not 0 <= gamma < 1:
            raise ValueError("planted edge must lie in [0, 1)")
        self.T0 = T0
        self.S = S
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.block = block
        self.t = 0
        self._buf_x = self._buf_y = None
        self._pos = 0

    def edge_at(self, t: int) -> float:
        """Planted edge at round ``t`` (1-based)."""
        if self.mode == "constant_edge":
            return self.gamma
        return 0.0 if t <= self.T0 else 2.0 * self.gamma

    def batch(self, T: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``T`` rounds as (features (T, N), labels (T,))."""
        ts = self.t + 1 + np.arange(T)
        y = self.rng.integers(self.k, size=T)
        u = self.rng.random((T, self.N))
        edge = np.array([self.edge_at(int(t)) for t in ts]) if self.mode == "two_phase" \
            else np.full(T, self.gamma)
        base = (1.0 - edge) / self.k
        # inverse CDF of the edge distribution: labels below y take base each,
        # y takes base + edge, labels above take base each
        lo = base * y
        hi = lo + base + edge
        below = np.floor(u / base[:, None]).astype(np.int64)
        above = y[:, None] + 1 + np.floor((u - hi[:, None]) / base[:, None]).astype(np.int64)
        x = np.where(u < lo[:, None], below, np.where(u < hi[:, None], y[:, None], above))
        x = np.clip(x, 0, self.k - 1)
        self.t += T
        return x, y

    def __iter__(self):
        return self

    def __next__(self) -> Example:
        if self._buf_x is None or self._pos >= len(self._buf_y):
            self._buf_x, self._buf_y = self.batch(self.block)
            self._pos = 0
        x, y = self._buf_x[self._pos], self._buf_y[self._pos]
        self._pos += 1
        return Example(x, int(y), 1.0)

    def config(self) -> dict:
        return {"k": self.k, "gamma": self.gamma, "N": self.N, "mode": self.mode,
                "T0": self.T0, "S": self.S, "seed": self.seed}


def adversary_next(stream: AdversaryStream) -> Example:
    return next(stream)


@dataclass(frozen=True)
class WlcResult:
    passed: bool
    margin: float
    lhs: float
    rhs: float


def empirical_wlc_check(log, gamma: float, S: float, k: int | None = None) -> WlcResult:
    """Evaluate the online weak-learning inequality on a logged run.

    ``log`` yields ``(w, C, y, y_hat)`` with eor-normalised ``C``.  The
    learner passes when its weighted cost is at most
    ``(1 - gamma) / k * sum(w) + S``.
    """
    lhs = 0.0
    wsum = 0.0
    for n, entry in enumerate(log):
        try:
            w, C, y, y_hat = entry
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed log entry {n}") from exc
        C = np.asarray(getattr(C, "entries", C), dtype=float)
        if k is None:
            k = C.shape[0]
        if not 0.0 <= w <= 1.0:
            raise ValueError(f"log entry {n}: weight {w} outside [0, 1]")
        if not validate_cost_matrix(C, CostKind.EOR, k=k):
            raise ValueError(f"log entry {n}: cost matrix is not eor-normalised")
        lhs += w * C[y, y_hat]
        wsum += w
    if k is None:
        raise ValueError("empty log and no k given")
    rhs = (1.0 - gamma) / k * wsum + S
    return WlcResult(lhs <= rhs, rhs - lhs, lhs, rhs)
