"""Prequential experiment runner and lower-bound simulations."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import CostKind, CostMatrix
from ..mbbm import OnlineMBBM
from ..olm import AdaboostOLM
from ..potential import PotentialEngine, potential_exact
from ..weaklearn import AdversaryStream, EdgeOracleLearner, OnlineNaiveBayes, OnlineStump
from .config import ConfigError, ExperimentConfig
from .data import (DataError, Dataset, DatasetSpec, balance_spec, cars_spec, data_dir,
                   load_dataset, locate_cars, write_balance_csv)

SMALL_DATASET_ROWS = 2000


def final_window(T: int) -> int:
    return math.ceil(0.2 * T)


def seed_for(master: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master), *map(int, path)])


class SingleLearner:
    """One weak learner behind the booster interface, trained with unit weights."""

    def __init__(self, learner, k: int):
        self.learner = learner
        self.k = k
        C = np.full((k, k), 1.0 / (k - 1))
        np.fill_diagonal(C, 0.0)
        self._C = CostMatrix(C, CostKind.EOR)
        self._x = None

    def predict(self, x):
        if self._x is not None:
            raise RuntimeError("previous round was not closed with learn()")
        self.learner.receive_cost_matrix(self._C)
        self._x = x
        return int(self.learner.predict(x)), None

    def learn(self, y, record=None):
        if self._x is None:
            raise RuntimeError("learn() called without an open round")
        x, self._x = self._x, None
        self.learner.learn(x, y, 1.0)


def make_learners(cfg: ExperimentConfig, k: int, n: int, seed) -> list:
    rng = np.random.default_rng(seed)
    if cfg.learner == "oracle":
        return [EdgeOracleLearner(i) for i in range(n)]
    if cfg.learner == "naive_bayes":
        return [OnlineNaiveBayes(k, var_floor=cfg.var_floor) for _ in range(n)]
    return [OnlineStump.random(k, rng, (cfg.refresh_min, cfg.refresh_max), n_bins=cfg.n_bins)
            for _ in range(n)]


# ---- streams -------------------------------------------------------------

@dataclass
class Stream:
    X: np.ndarray
    y: np.ndarray
    k: int
    name: str


def resolve_dataset(cfg: ExperimentConfig) -> Dataset | None:
    """Load the configured dataset; ``None`` for adversary streams."""
    if cfg.dataset == "adversary":
        return None
    if cfg.dataset == "balance":
        return load_dataset(balance_spec(write_balance_csv(data_dir() / "balance.csv")))
    if cfg.dataset == "cars":
        path = locate_cars()
        if path is None:
            raise DataError(f"car data not found; place car.data in {data_dir()} "
                            "or run `omboost fetch-cars`")
        return load_dataset(cars_spec(path))
    spec = DatasetSpec(cfg.dataset, cfg.label_column, categorical=list(cfg.categorical),
                       fill_missing=cfg.fill_missing, labels=list(cfg.labels) or None)
    return load_dataset(spec)


def default_reorders(cfg: ExperimentConfig, ds: Dataset | None) -> int:
    if cfg.reorders is not None:
        return cfg.reorders
    if ds is None:
        return 1
    return 27 if len(ds) <= SMALL_DATASET_ROWS else 9


def make_stream(cfg: ExperimentConfig, ds: Dataset | None, r: int) -> Stream:
    if ds is None:
        adv = AdversaryStream(cfg.adversary_k, cfg.adversary_edge, cfg.N, mode=cfg.adversary_mode,
                              T0=cfg.adversary_T0, S=cfg.adversary_S,
                              seed=seed_for(cfg.seed, 0, r))
        X, y = adv.batch(cfg.adversary_T)
        return Stream(X, y, cfg.adversary_k, "adversary")
    order = np.random.default_rng(seed_for(cfg.seed, 0, r)).permutation(len(ds))
    return Stream(ds.X[order], ds.y[order], ds.k, ds.name)


# ---- results -------------------------------------------------------------

@dataclass
class RunResult:
    dataset: str
    k: int
    algorithm: str
    column: str
    N: int
    gamma: float | None
    loss: str | None
    fingerprint: str
    total_accuracy: float = float("nan")
    final20_accuracy: float = float("nan")
    seconds: float = float("nan")
    per_reorder_total: list = field(default_factory=list)
    per_reorder_final20: list = field(default_factory=list)
    tie_loss_rate: float | None = None
    empirical_edges: list | None = None
    mistakes: list | None = None
    partial: bool = False
    error: str = ""


def column_label(algorithm: str, gamma: float | None = None, loss: str = "logistic") -> str:
    if algorithm == "online_mbbm":
        g = f"{gamma:g}"
        return "MB " + (g[1:] if g.startswith("0.") else g)
    if algorithm == "adaboost_olm":
        return "OLM" if loss == "logistic" else f"OLM {loss}"
    return "Single"


def _booster(cfg, algorithm, gamma, k, learners, seed, audit, shared):
    if algorithm == "online_mbbm":
        key = (len(learners), k, gamma)
        if key not in shared:
            shared[key] = (PotentialEngine(k, gamma, max_states=cfg.max_states,
                                           mc_samples=cfg.mc_samples), {})
        engine, cache = shared[key]
        return OnlineMBBM(learners, k, gamma, weight_scaling=cfg.weight_scaling,
                          c=cfg.bound_constant, engine=engine, seed=cfg.seed,
                          audit=audit, cache=cache)
    if algorithm == "adaboost_olm":
        return AdaboostOLM(learners, k, cfg.loss, seed=seed, audit=audit)
    return SingleLearner(learners[0], k)


def run_stream(booster, stream: Stream, keep_votes: bool = False):
    """Predict-then-learn over the stream.  Returns (correct flags, tie losses or None)."""
    T = len(stream.y)
    correct = np.zeros(T, dtype=bool)
    ties = np.zeros(T, dtype=bool) if keep_votes else None
    X, Y = stream.X, stream.y
    for t in range(T):
        y_hat, rec = booster.predict(X[t])
        y = int(Y[t])
        booster.learn(y, rec)
        correct[t] = y_hat == y
        if keep_votes:
            s = rec.votes
            ties[t] = max(s[l] for l in range(len(s)) if l != y) >= s[y]
    return correct, ties


def run_experiment(cfg: ExperimentConfig, ds: Dataset | None = None, algorithm: str | None = None,
                   gamma: float | None = None, audit_dir=None, keep_trace: bool = False) -> RunResult:
    """Run one (algorithm, gamma) cell over every reordering and average."""
    algorithm = algorithm or cfg.algorithm[0]
    if algorithm == "online_mbbm" and gamma is None:
        gamma = cfg.gamma[0] if cfg.gamma else None
        if gamma is None:
            raise ConfigError("online_mbbm requires gamma")
    k = ds.k if ds is not None else cfg.adversary_k
    name = ds.name if ds is not None else f"adversary-{cfg.adversary_mode}"
    res = RunResult(name, k, algorithm, column_label(algorithm, gamma, cfg.loss),
                    cfg.N if algorithm != "single_weak" else 1,
                    gamma if algorithm == "online_mbbm" else None,
                    cfg.loss if algorithm == "adaboost_olm" else None, cfg.fingerprint())
    R = default_reorders(cfg, ds)
    shared: dict = {}
    times, ties_all, edges_all, trace = [], [], [], []
    try:
        for r in range(R):
            stream = make_stream(cfg, ds, r)
            n = cfg.N if algorithm != "single_weak" else 1
            learners = make_learners(cfg, k, n, seed_for(cfg.seed, 1, r))
            audit = None
            if audit_dir is not None:
                audit = open(f"{audit_dir}/audit_{res.column.replace(' ', '_')}_r{r}.jsonl", "w")
            try:
                booster = _booster(cfg, algorithm, gamma, k, learners, seed_for(cfg.seed, 2, r),
                                   audit, shared)
                t0 = time.perf_counter()
                correct, ties = run_stream(booster, stream, keep_votes=algorithm == "online_mbbm")
                times.append(time.perf_counter() - t0)
            finally:
                if audit is not None:
                    audit.close()
            w = final_window(len(correct))
            res.per_reorder_total.append(float(correct.mean()))
            res.per_reorder_final20.append(float(correct[-w:].mean()))
            if ties is not None:
                ties_all.append(float(ties.mean()))
            if algorithm == "adaboost_olm":
                edges_all.append(booster.empirical_edges())
            if keep_trace:
                trace.append((~correct).astype(int).tolist())
    except Exception as exc:   # abort with what finished
        res.partial = True
        res.error = f"{type(exc).__name__}: {exc}"
    if res.per_reorder_total:
        res.total_accuracy = float(np.mean(res.per_reorder_total))
        res.final20_accuracy = float(np.mean(res.per_reorder_final20))
        res.seconds = float(np.mean(times)) if times else float("nan")
    if ties_all:
        res.tie_loss_rate = float(np.mean(ties_all))
    if edges_all:
        res.empirical_edges = _mean_edges(edges_all)
    if keep_trace:
        res.mistakes = trace
    return res


def _mean_edges(edges_all):
    out = []
    for col in zip(*edges_all):
        vals = [v for v in col if v is not None]
        out.append(float(np.mean(vals)) if vals else None)
    return out


def best_single(cfg: ExperimentConfig, ds: Dataset, M: int) -> RunResult:
    """Best of ``M`` randomised single weak learners by mean final-20% accuracy."""
    R = default_reorders(cfg, ds)
    best = None
    for m in range(M):
        finals, totals, times = [], [], []
        for r in range(R):
            stream = make_stream(cfg, ds, r)
            learner = make_learners(cfg, ds.k, 1, seed_for(cfg.seed, 3, m))[0]
            t0 = time.perf_counter()
            correct, _ = run_stream(SingleLearner(learner, ds.k), stream)
            times.append(time.perf_counter() - t0)
            w = final_window(len(correct))
            totals.append(float(correct.mean()))
            finals.append(float(correct[-w:].mean()))
        cand = (float(np.mean(finals)), -m, totals, finals, float(np.mean(times)))
        if best is None or cand[:2] > best[:2]:
            best = cand
    final, neg_m, totals, finals, secs = best
    res = RunResult(ds.name, ds.k, "best_single", f"Best of {M}", 1, None, None, cfg.fingerprint(),
                    float(np.mean(totals)), final, secs, totals, finals)
    return res


def experiment_cells(cfg: ExperimentConfig) -> list[tuple[str, float | None]]:
    cells = []
    for a in cfg.algorithm:
        if a == "online_mbbm":
            cells.extend((a, g) for g in cfg.gamma)
        else:
            cells.append((a, None))
    return cells


def _run_cell(args):
    cfg, ds, a, g, audit_dir = args
    return run_experiment(cfg, ds, a, g, audit_dir=audit_dir)


def run_all(cfg: ExperimentConfig, ds: Dataset | None = None, audit_dir=None) -> list[RunResult]:
    """Every configured cell, plus the best-of-M baseline when ``baseline_m > 0``."""
    jobs = [(cfg, ds, a, g, audit_dir) for a, g in experiment_cells(cfg)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    if cfg.baseline_m > 0 and ds is not None:
        results.insert(0, best_single(cfg, ds, cfg.baseline_m))
    return results


# ---- lower-bound simulation ----------------------------------------------

@dataclass
class SimulationReport:
    k: int
    gamma: float
    S: float
    N: int
    T: int
    mode: str
    seeds: list
    T0: float | None
    exact_error: float | None        # potential at planted edge 2*gamma (constant mode)
    errors: list = field(default_factory=list)          # per seed, ties count as errors
    strict_errors: list = field(default_factory=list)   # per seed, argmax != y
    noise_mistakes: list = field(default_factory=list)  # per seed, rounds t <= T0

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.errors))

    @property
    def pooled_se(self) -> float | None:
        if self.exact_error is None:
            return None
        p = self.exact_error
        return math.sqrt(p * (1 - p) / (self.T * len(self.seeds)))

    @property
    def within_3se(self) -> bool | None:
        if self.exact_error is None:
            return None
        return abs(self.mean_error - self.exact_error) <= 3 * self.pooled_se + 1e-15


def majority_vote_outcomes(X: np.ndarray, y: np.ndarray, k: int):
    """Vectorised simple-majority vote.  Returns (strict mistakes, tie-inclusive losses)."""
    counts = np.stack([(X == l).sum(axis=1) for l in range(k)], axis=1)
    y_hat = counts.argmax(axis=1)
    own = counts[np.arange(len(y)), y]
    counts[np.arange(len(y)), y] = -1
    return y_hat != y, counts.max(axis=1) >= own


def simulate_lower_bound(k: int, gamma: float, S: float, N: int, T: int, seeds,
                         mode: str = "constant_edge", delta: float = 0.01) -> SimulationReport:
    """Majority vote over N oracle coordinates with planted edge 2*gamma."""
    if k < 2 or N < 1 or T < 1:
        raise ValueError("need k >= 2, N >= 1 and T >= 1")
    if not 0.0 < gamma < 0.25:
        raise ValueError(f"gamma must lie in (0, 1/4), got {gamma}")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if S < k * math.log(1.0 / delta) / gamma:
        raise ValueError(f"S = {S} below k ln(1/delta)/gamma = {k * math.log(1 / delta) / gamma:.4g}")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    T0 = k * S / (4.0 * gamma) if mode == "two_phase" else None
    exact = potential_exact(0, N, [0] * k, k, 2 * gamma) if mode == "constant_edge" else None
    rep = SimulationReport(k, gamma, S, N, T, mode, seeds, T0, exact)
    for sd in seeds:
        adv = AdversaryStream(k, 2 * gamma if mode == "constant_edge" else gamma, N, mode=mode,
                              S=S, seed=sd)
        X, y = adv.batch(T)
        strict, tied = majority_vote_outcomes(X, y, k)
        rep.errors.append(float(tied.mean()))
        rep.strict_errors.append(float(strict.mean()))
        if T0 is not None:
            rep.noise_mistakes.append(int(strict[:int(math.floor(T0))].sum()))
    return rep


def noise_phase_mistakes(booster, k: int, gamma: float, S: float, N: int, seed) -> int:
    """Mistakes of ``booster`` (fed oracle features) during the noise phase of a two-phase stream."""
    adv = AdversaryStream(k, gamma, N, mode="two_phase", S=S, seed=seed)
    T0 = int(math.floor(adv.T0))
    X, y = adv.batch(T0)
    correct, _ = run_stream(booster, Stream(X, y, k, "adversary"))
    return int((~correct).sum())
