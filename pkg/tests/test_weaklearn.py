import copy
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omboost.weaklearn import (AdversaryStream, EdgeOracleLearner, OnlineNaiveBayes,
                               OnlineStump, adversary_next, empirical_wlc_check, oracle_predict)
from oracles import binomial_se, uniform_eor


# ---- stump

def test_stump_cold_start():
    # [TRIVIAL] label 1 (index 0) before any training
    assert OnlineStump(3).predict([1.0, 2.0]) == 0


def test_stump_learns_threshold():
    # [DERIVED] separable 1-D stream; class 1 iff x < 0
    rng = np.random.default_rng(0)
    st_ = OnlineStump(2)
    for _ in range(500):
        x = rng.normal()
        st_.learn([x], 0 if x < 0 else 1, float(rng.uniform(0.2, 1.0)))
    test = rng.normal(size=2000)
    acc = np.mean([st_.predict([x]) == (0 if x < 0 else 1) for x in test])
    assert acc >= 0.95


def test_stump_zero_weights_are_noop():
    # [TRIVIAL]
    st_ = OnlineStump(3, refresh_period=1)
    for j in range(100):
        st_.learn([float(j)], 2, 0.0)
    assert st_.predict([5.0]) == 0 and st_.n_updates == 0


def test_stump_half_weights_twice_equal_full_weight():
    rng = np.random.default_rng(3)
    X = rng.integers(0, 6, size=(300, 3)).astype(float)
    y = rng.integers(0, 3, size=300)
    a, b = OnlineStump(3, refresh_period=1000), OnlineStump(3, refresh_period=1000)
    for x, l in zip(X, y):
        a.learn(x, int(l), 1.0)
        b.learn(x, int(l), 0.5)
        b.learn(x, int(l), 0.5)
    assert np.array_equal(a.centers, b.centers)
    assert np.allclose(a.mass, b.mass, atol=1e-12)


def test_stump_bin_budget_respected():
    st_ = OnlineStump(2, n_bins=8)
    rng = np.random.default_rng(1)
    for x in rng.normal(size=400):
        st_.learn([x], int(x > 0.3), 1.0)
    assert st_.n_used[0] <= 8
    assert np.isclose(st_.mass.sum(), 400)
    assert st_.predict([2.0]) == 1 and st_.predict([-2.0]) == 0


def test_stump_statistics_non_negative():
    st_ = OnlineStump(3, n_bins=4)
    rng = np.random.default_rng(2)
    for _ in range(200):
        st_.learn(rng.normal(size=2), int(rng.integers(3)), float(rng.random()))
    assert (st_.mass >= 0).all()


def test_stump_dimension_change_rejected():
    st_ = OnlineStump(2)
    st_.learn([0.0, 1.0], 0)
    with pytest.raises(ValueError):
        st_.learn([0.0], 0)


def test_stump_hyperparameter_validation():
    with pytest.raises(ValueError):
        OnlineStump(2, n_bins=1)
    with pytest.raises(ValueError):
        OnlineStump(2, refresh_period=0)
    s = OnlineStump.random(3, np.random.default_rng(0), (5, 20))
    assert 5 <= s.hyperparameters["refresh_period"] <= 20


# ---- naive Bayes

def test_nb_cold_start_and_learning():
    nb = OnlineNaiveBayes(3)
    assert nb.predict([0.0]) == 0
    rng = np.random.default_rng(0)
    for _ in range(600):
        l = int(rng.integers(3))
        nb.learn([rng.normal(loc=4 * l)], l, 1.0)
    assert [nb.predict([4.0 * l]) for l in range(3)] == [0, 1, 2]
    assert abs(nb.priors().sum() - 1) < 1e-12
    assert (nb.variances() >= nb.var_floor).all()


def test_nb_weighted_welford_matches_numpy():
    # [DERIVED] weighted mean and variance from numpy
    rng = np.random.default_rng(4)
    x = rng.normal(size=(50, 2))
    w = rng.uniform(0.1, 1, size=50)
    nb = OnlineNaiveBayes(2)
    for xi, wi in zip(x, w):
        nb.learn(xi, 1, wi)
    mean = np.average(x, axis=0, weights=w)
    var = np.average((x - mean) ** 2, axis=0, weights=w)
    assert np.allclose(nb.mean[1], mean) and np.allclose(nb.variances()[1], var)


def test_nb_zero_weight_skipped():
    nb = OnlineNaiveBayes(2)
    nb.learn([1.0], 1, 0.0)
    assert nb.mean is None and nb.counts.sum() == 0


# ---- oracle learner

def test_oracle_reads_coordinate():
    # [TRIVIAL] x = (2, 1, 3) with index 1 (0-based 0) reads 2
    assert oracle_predict(EdgeOracleLearner(0), [2, 1, 3]) == 2


def test_oracle_out_of_range():
    with pytest.raises(IndexError):
        EdgeOracleLearner(3).predict([0, 1, 2])


def test_oracle_agreement_constant_edge():
    # [DERIVED] agreement rate (1 - 0.2)/3 + 0.2
    X, y = AdversaryStream(3, 0.2, 1, seed=11).batch(10**5)
    p = 0.8 / 3 + 0.2
    assert abs((X[:, 0] == y).mean() - p) <= 3 * binomial_se(p, 10**5)


def test_oracle_agreement_noise_phase():
    # [DERIVED] 1/k before the phase boundary
    adv = AdversaryStream(3, 0.1, 50, mode="two_phase", T0=2000, seed=5)
    X, y = adv.batch(2000)
    n = X.size
    assert abs((X == y[:, None]).mean() - 1 / 3) <= 3 * binomial_se(1 / 3, n)


# ---- adversary

def test_two_phase_boundary():
    # [PAPER] T0 = kS/(4 gamma) = 225
    adv = AdversaryStream(3, 0.1, 5, mode="two_phase", S=30)
    assert adv.T0 == pytest.approx(225)
    assert adv.edge_at(225) == 0.0 and adv.edge_at(226) == pytest.approx(0.2)


def test_zero_edge_is_noise():
    # [TRIVIAL]
    X, y = AdversaryStream(2, 0.0, 4, seed=1).batch(50000)
    assert abs((X == y[:, None]).mean() - 0.5) <= 3 * binomial_se(0.5, X.size)


def test_planted_edge_k2():
    # [DERIVED] (1 - 0.4)/2 + 0.4
    X, y = AdversaryStream(2, 0.4, 3, seed=2).batch(50000)
    assert abs((X == y[:, None]).mean() - 0.7) <= 3 * binomial_se(0.7, X.size)


def test_labels_uniform_and_in_range():
    X, y = AdversaryStream(4, 0.3, 6, seed=3).batch(40000)
    assert X.min() >= 0 and X.max() <= 3
    freq = np.bincount(y, minlength=4) / len(y)
    assert np.all(np.abs(freq - 0.25) <= 3 * binomial_se(0.25, len(y)))


def test_conditional_marginals_match_edge_masses():
    X, y = AdversaryStream(3, 0.3, 1, seed=4).batch(60000)
    sel = X[y == 1, 0]
    freq = np.bincount(sel, minlength=3) / len(sel)
    expect = np.array([0.7 / 3, 0.7 / 3 + 0.3, 0.7 / 3])
    assert np.all(np.abs(freq - expect) <= 4 * np.sqrt(expect * (1 - expect) / len(sel)))


def test_iteration_matches_batch():
    a = AdversaryStream(3, 0.2, 4, seed=9, block=7)
    b = AdversaryStream(3, 0.2, 4, seed=9, block=7)
    X, y = b.batch(7)
    for j in range(7):
        ex = adversary_next(a)
        assert np.array_equal(ex.features, X[j]) and ex.label == y[j]


def test_adversary_parameter_checks():
    with pytest.raises(ValueError):
        AdversaryStream(3, 0.1, 2, mode="nope")
    with pytest.raises(ValueError):
        AdversaryStream(3, 0.1, 2, mode="two_phase")
    with pytest.raises(ValueError):
        AdversaryStream(3, 1.0, 2)


# ---- weak-learning check

def test_wlc_always_correct():
    # [TRIVIAL]
    C = uniform_eor(3)
    log = [(1.0, C, t % 3, t % 3) for t in range(30)]
    res = empirical_wlc_check(log, 0.1, 5.0)
    assert res.passed and res.lhs == 0 and res.margin == pytest.approx(0.9 / 3 * 30 + 5)


def test_wlc_zero_weights():
    # [TRIVIAL]
    C = uniform_eor(3)
    res = empirical_wlc_check([(0.0, C, 0, 1)] * 10, 0.1, 4.0)
    assert res.passed and res.margin == pytest.approx(4.0)


def test_wlc_malformed_log():
    with pytest.raises(ValueError):
        empirical_wlc_check([(1.0, uniform_eor(3), 0)], 0.1, 1.0)
    with pytest.raises(ValueError):
        empirical_wlc_check([(1.5, uniform_eor(3), 0, 1)], 0.1, 1.0)
    bad = uniform_eor(3) * 0.5
    with pytest.raises(ValueError):
        empirical_wlc_check([(1.0, bad, 0, 1)], 0.1, 1.0)
    with pytest.raises(ValueError):
        empirical_wlc_check([], 0.1, 1.0)


def test_wlc_oracle_with_doubled_edge():
    # [DERIVED] martingale concentration: S = k ln(100)/gamma suffices w.p. >= 0.99
    k, g, T = 3, 0.1, 10**4
    S = k * math.log(100) / g
    C = uniform_eor(k)
    passes = 0
    for seed in range(100):
        X, y = AdversaryStream(k, 2 * g, 1, seed=seed).batch(T)
        # cost of a wrong prediction is 1/(k-1) under uniform rows
        lhs = np.sum(X[:, 0] != y) * C[0, 1]
        passes += lhs <= (1 - g) / k * T + S
    assert passes >= 99
    log = [(1.0, C, int(yy), int(xx)) for xx, yy in zip(X[:200, 0], y[:200])]
    assert empirical_wlc_check(log, g, S).passed


# ---- interface discipline

@given(st.integers(0, 10**6))
def test_predict_does_not_mutate(seed):
    rng = np.random.default_rng(seed)
    for learner in (OnlineStump(3, refresh_period=3), OnlineNaiveBayes(3)):
        for _ in range(20):
            learner.learn(rng.integers(0, 4, size=2).astype(float), int(rng.integers(3)), float(rng.random()))
        before = copy.deepcopy(learner.__dict__)
        learner.receive_cost_matrix(uniform_eor(3))
        learner.predict(rng.integers(0, 4, size=2).astype(float))
        after = learner.__dict__
        for key, v in before.items():
            if key == "cost_matrix":
                continue
            if isinstance(v, np.ndarray):
                assert np.array_equal(v, after[key])
            else:
                assert v == after[key]
