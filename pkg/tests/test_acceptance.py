"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

Each ``criterion_*`` function returns ``(passed, detail)``.  Under pytest every
criterion prints one PASS/FAIL line to the terminal; ``python
tests/test_acceptance.py`` prints the same lines without pytest.
"""

import itertools
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

sys.path.insert(0, str(Path(__file__).parent))

from oracles import enumerate_vote_vectors  # noqa: E402

from omboost.harness.cli import main as cli_main  # noqa: E402
from omboost.harness.config import parse_config_text  # noqa: E402
from omboost.harness.data import DataError  # noqa: E402
from omboost.harness.runner import (best_single, noise_phase_mistakes, resolve_dataset,  # noqa: E402
                                    run_experiment, simulate_lower_bound)
from omboost.mbbm import OnlineMBBM  # noqa: E402
from omboost.olm import AdaboostOLM, make_loss  # noqa: E402
from omboost.online_opt import LEA, OnlineGradientDescent  # noqa: E402
from omboost.potential import (PotentialTable, asymptotic_error_bound, potential_exact,  # noqa: E402
                               potential_multinomial)
from omboost.weaklearn import AdversaryStream, EdgeOracleLearner  # noqa: E402


# ---- 1: potential vs brute force

def _draw_table(k, i, gamma, r):
    """Vote-count increments and probabilities of all k**i draw sequences."""
    u = np.full(k, (1 - gamma) / k)
    u[r] += gamma
    seqs = np.array(list(itertools.product(range(k), repeat=i)), dtype=np.int64).reshape(k ** i, i)
    counts = np.stack([(seqs == l).sum(axis=1) for l in range(k)], axis=1)
    probs = np.prod(u[seqs], axis=1) if i else np.ones(1)
    return counts, probs


def criterion_1():
    worst, n = 0.0, 0
    for k in range(2, 5):
        states = [s for tot in range(5) for s in enumerate_vote_vectors(k, tot)]
        for gamma in (0.0, 0.1, 0.3, 0.45):
            table = PotentialTable(k, gamma)
            for i in range(7):
                for r in range(k):
                    counts, probs = _draw_table(k, i, gamma, r)
                    for s in states:
                        final = counts + np.array(s)
                        own = final[:, r].copy()
                        final[:, r] = -1
                        brute = float(probs[final.max(axis=1) >= own].sum())
                        worst = max(worst, abs(table.value(r, i, s) - brute))
                        n += 1
    return worst <= 1e-12, f"{n} queries, max |exact - brute force| = {worst:.2e}"


# ---- 2: recurrence and multinomial sum

def criterion_2(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    worst_rec = worst_multi = 0.0
    for _ in range(n):
        k = int(rng.integers(2, 6))
        i = int(rng.integers(0, 16))
        gamma = float(rng.choice([0.0, 0.05, 0.1, 0.2, 0.3, 0.45]))
        r = int(rng.integers(k))
        s = [int(v) for v in rng.integers(0, 5, size=k)]
        u = np.full(k, (1 - gamma) / k)
        u[r] += gamma
        lhs = potential_exact(r, i + 1, s, k, gamma)
        rhs = 0.0
        for l in range(k):
            v = list(s)
            v[l] += 1
            rhs += u[l] * potential_exact(r, i, v, k, gamma)
        worst_rec = max(worst_rec, abs(lhs - rhs))
        worst_multi = max(worst_multi, abs(lhs - potential_multinomial(r, i + 1, s, k, gamma)))
    ok = worst_rec <= 1e-12 and worst_multi <= 1e-12
    return ok, f"{n} queries, recurrence gap {worst_rec:.2e}, multinomial gap {worst_multi:.2e}"


# ---- 3: exponential error bound

def criterion_3():
    worst_slack, n, bad = math.inf, 0, []
    for k in (2, 3, 5):
        for gamma in (0.05, 0.1, 0.3):
            table = PotentialTable(k, gamma)
            for N in range(5, 55, 5):
                v = table.value(0, N, [0] * k)
                b = asymptotic_error_bound(k, gamma, N)
                n += 1
                worst_slack = min(worst_slack, b - v)
                if not v <= b:
                    bad.append((k, gamma, N))
    return not bad, f"{n} grid points, min slack {worst_slack:.3e}, violations {bad}"


# ---- 4: error floor with edge oracles

def criterion_4(seeds=20, T=50000):
    k, gamma, N = 3, 0.3, 20
    exact = potential_exact(0, N, [0] * k, k, gamma)
    bound = asymptotic_error_bound(k, gamma, N)
    shared = None
    errs, strict = [], []
    for sd in range(seeds):
        X, y = AdversaryStream(k, gamma, N, seed=sd).batch(T)
        b = OnlineMBBM([EdgeOracleLearner(j) for j in range(N)], k, gamma, seed=sd,
                       engine=shared[0] if shared else None, cache=shared[1] if shared else None)
        shared = (b.engine, b._cache)
        lost = wrong = 0
        for t in range(T):
            y_hat, rec = b.predict(X[t])
            yt = int(y[t])
            b.learn(yt, rec)
            s = rec.votes
            own = s[yt]
            lost += max(s[l] for l in range(k) if l != yt) >= own
            wrong += y_hat != yt
        errs.append(lost / T)
        strict.append(wrong / T)
    mean = float(np.mean(errs))
    se = math.sqrt(exact * (1 - exact) / (T * seeds))
    ok = abs(mean - exact) <= 3 * se and mean < bound
    return ok, (f"error {mean:.5f} (ties lose) vs exact {exact:.5f}, 3 SE = {3 * se:.5f}, "
                f"bound {bound:.3f}; argmax error {np.mean(strict):.5f}")


# ---- 5: OGD regret

def _ogd_regret(k, T, rng, reactive):
    """Regret of logistic-variant OGD against the best fixed alpha on a [-2, 2] 1e-3 grid."""
    v = make_loss("logistic", k, 1)
    ogd = OnlineGradientDescent(c=2.0, k=k)
    A = np.full((T, k - 1), -np.inf)
    B = np.empty(T)
    paid = 0.0
    for t in range(T):
        s = rng.uniform(-3, 3, size=k)
        y = int(rng.integers(k))
        if reactive:
            # push against the current iterate
            l = y if ogd.alpha > 0 else int((y + 1 + rng.integers(k - 1)) % k)
        else:
            l = int(rng.integers(k))
        others = np.delete(np.arange(k), y)
        if l == y:
            A[t] = s[others] - s[y]
            B[t] = -1.0
        else:
            A[t, 0] = s[l] - s[y]
            B[t] = 1.0
        a = ogd.alpha
        paid += float(np.logaddexp(0.0, A[t] + B[t] * a).sum())
        ogd.step(v.gradient(a, s, l, y))

    def total(a):
        return float(np.logaddexp(0.0, A + B[:, None] * a).sum())

    # the cumulative loss is convex in alpha; refine the continuous optimum on the grid
    opt = minimize_scalar(total, bounds=(-2.0, 2.0), method="bounded", options={"xatol": 1e-6}).x
    centre = round(opt * 1000)
    grid = [j / 1000 for j in range(max(-2000, centre - 3), min(2000, centre + 3) + 1)]
    best = min(total(a) for a in grid)
    return paid - best


def criterion_5(n=100, T=10000, seed=0):
    worst = {}
    ok = True
    for k in (2, 5):
        bound = 4 * math.sqrt(2) * (k - 1) * math.sqrt(T)
        rng = np.random.default_rng([seed, k])
        regs = [_ogd_regret(k, T, rng, reactive=j % 2 == 1) for j in range(n)]
        worst[k] = (max(regs), bound)
        ok &= max(regs) <= bound
    detail = ", ".join(f"k={k}: max regret {r:.1f} <= {b:.1f}" for k, (r, b) in worst.items())
    return ok, f"{n} sequences per k; {detail}"


# ---- 6: gradients vs central differences

def _near_kink(s, alpha, l, y):
    t = np.array(s, dtype=float)
    t[l] += alpha
    z = np.delete(t, y) - t[y]
    return np.any(np.abs(z + 1.0) < 1e-3)


def criterion_6(n=1000, seed=0, h=1e-5):
    rng = np.random.default_rng(seed)
    report, ok = [], True
    for name in ("logistic", "exponential", "square_hinge"):
        worst, done = 0.0, 0
        while done < n:
            k = int(rng.integers(2, 6))
            s = rng.uniform(-2, 2, size=k)
            alpha = float(rng.uniform(-2, 2))
            l, y = int(rng.integers(k)), int(rng.integers(k))
            if name == "square_hinge" and (_near_kink(s, alpha + h, l, y) or _near_kink(s, alpha - h, l, y)
                                           or _near_kink(s, alpha, l, y)):
                continue
            v = make_loss(name, k, 10)

            def f(a):
                t = s.copy()
                t[l] += a
                return v.loss(y, t)

            g = v.gradient(alpha, s, l, y)
            fd = (f(alpha + h) - f(alpha - h)) / (2 * h)
            scale = max(abs(g), abs(fd))
            rel = 0.0 if scale == 0.0 else abs(g - fd) / scale
            worst = max(worst, rel)
            done += 1
        ok &= worst <= 1e-6
        report.append(f"{name} {worst:.1e}")
    return ok, f"{n} checks per variant, max relative error: " + ", ".join(report)


# ---- 7: expert advice regret

def _lea_run(seed, N=10, T=10000, k=4):
    rng = np.random.default_rng(seed)
    lea = LEA(N, T)
    skill = rng.uniform(0.2, 0.6, size=N)
    paid = 0.0
    for _ in range(T):
        y = int(rng.integers(k))
        C = rng.random((k, k))
        np.fill_diagonal(C, 0.0)
        C /= C.sum(axis=1, keepdims=True)
        # experts are right with their own skill; otherwise pick the costliest label
        advice = np.where(rng.random(N) < skill, y, int(np.argmax(C[y])))
        pred = lea.round(advice, 1.0, C, y, rng)
        paid += C[y, pred]
    slack = math.sqrt(T * math.log(N) / 2) + math.sqrt(T * math.log(20) / 2)
    return paid <= lea.costs.min() + slack, paid - lea.costs.min(), slack


def criterion_7(runs=100):
    res = [_lea_run(sd) for sd in range(runs)]
    passes = sum(r[0] for r in res)
    return passes >= 95, (f"{passes}/{runs} runs within bound; max regret "
                          f"{max(r[1] for r in res):.1f} vs slack {res[0][2]:.1f}")


# ---- 8: boosting beats the best single stump

GAMMAS = (0.3, 0.1, 0.05, 0.01, 0.001)


def _dataset_comparison(name):
    cfg = parse_config_text(f"dataset = {name}\nN = 100\nreorders = 27\nseed = 0\n"
                            "algorithm = adaboost_olm\nalgorithm = online_mbbm\n"
                            + "".join(f"gamma = {g}\n" for g in GAMMAS))
    ds = resolve_dataset(cfg)
    base = best_single(cfg, ds, 20)
    olm = run_experiment(cfg, ds, "adaboost_olm")
    mbbm = [run_experiment(cfg, ds, "online_mbbm", g) for g in GAMMAS]
    best_mb = max(m.final20_accuracy for m in mbbm)
    ok = (not olm.partial and olm.final20_accuracy - base.final20_accuracy >= 0.005
          and best_mb >= olm.final20_accuracy - 0.05)
    return ok, (f"{name}: best single {base.final20_accuracy:.4f}, OLM {olm.final20_accuracy:.4f}, "
                f"best MB {best_mb:.4f}")


def criterion_8():
    parts, ok = [], True
    for name in ("balance", "cars"):
        try:
            good, detail = _dataset_comparison(name)
        except DataError as exc:
            good, detail = False, f"{name}: unavailable ({exc})"
        ok &= good
        parts.append(detail)
    return ok, "; ".join(parts)


# ---- 9: noise-phase mistakes

def criterion_9(seeds=100, N=20):
    k, gamma, S = 3, 0.1, 30.0
    # S = 30 meets S >= k ln(1/delta)/gamma only for delta >= e^-1
    rep = simulate_lower_bound(k, gamma, S, N, 225, range(seeds), mode="two_phase", delta=0.5)
    need = 0.55 * rep.T0
    counts = {"majority": sum(m >= need for m in rep.noise_mistakes)}
    mb = olm = 0
    for sd in range(seeds):
        b = OnlineMBBM([EdgeOracleLearner(j) for j in range(N)], k, gamma, seed=sd)
        mb += noise_phase_mistakes(b, k, gamma, S, N, sd) >= need
        b = AdaboostOLM([EdgeOracleLearner(j) for j in range(N)], k, seed=sd)
        olm += noise_phase_mistakes(b, k, gamma, S, N, sd) >= need
    counts["OnlineMBBM"] = mb
    counts["Adaboost.OLM"] = olm
    ok = all(c >= 95 for c in counts.values())
    return ok, f"T0 = {rep.T0:g}, need {need:g} mistakes; seeds passing: " + ", ".join(
        f"{n} {c}/{seeds}" for n, c in counts.items())


# ---- 10: determinism

def criterion_10(tmp):
    tmp = Path(tmp)
    cfg = tmp / "det.cfg"
    cfg.write_text("dataset = balance\nN = 5\nreorders = 2\nseed = 11\n"
                   "algorithm = single_weak, adaboost_olm, online_mbbm\ngamma = 0.1\nbaseline_m = 3\n")
    same = []
    for label, argv in (("run", ["run", str(cfg)]),
                        ("simulate", ["simulate", "--k", "3", "--gamma", "0.1", "--S", "200",
                                      "--N", "9", "--T", "3000", "--seeds", "3", "--seed", "11"])):
        outs = []
        for rep in ("a", "b"):
            d = tmp / f"{label}_{rep}"
            code = cli_main(argv + ["--out", str(d)])
            outs.append((code, (d / "results.csv").read_bytes()))
        same.append(outs[0] == outs[1] and outs[0][0] == 0)
    return all(same), f"run identical: {same[0]}, simulate identical: {same[1]}"


CRITERIA = [
    (1, "potential equals brute-force enumeration", criterion_1),
    (2, "recurrence and multinomial cross-check", criterion_2),
    (3, "exponential error bound on the grid", criterion_3),
    (4, "OnlineMBBM error floor with edge oracles", criterion_4),
    (5, "OGD regret", criterion_5),
    (6, "gradients match central differences", criterion_6),
    (7, "expert-advice regret", criterion_7),
    (8, "boosting beats the best single stump", criterion_8),
    (9, "noise-phase mistakes", criterion_9),
    (10, "byte-identical reruns", criterion_10),
]


def _line(num, title, ok, detail, secs):
    return f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title} ({secs:.1f}s): {detail}"


@pytest.mark.parametrize("num,title,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, title, fn, capsys, tmp_path, monkeypatch):
    if fn is criterion_10:
        monkeypatch.setenv("OMBOOST_DATA", str(tmp_path / "data"))
    t0 = time.perf_counter()
    ok, detail = fn(tmp_path) if fn is criterion_10 else fn()
    line = _line(num, title, ok, detail, time.perf_counter() - t0)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    import tempfile

    failed = 0
    for num, title, fn in CRITERIA:
        t0 = time.perf_counter()
        with tempfile.TemporaryDirectory() as d:
            ok, detail = fn(d) if fn is criterion_10 else fn()
        failed += not ok
        print(_line(num, title, ok, detail, time.perf_counter() - t0), flush=True)
    sys.exit(1 if failed else 0)
