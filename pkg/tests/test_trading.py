import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformal_decision.controller import SafetyEnvelope, empirical_risk, telescoping_risk, theorem_bound
from conformal_decision.trading import (
    Interval,
    MarketModel,
    Strategy,
    TradingConfig,
    decide,
    interval,
    run_strategy,
    run_strategy_batch,
    simulate_paths,
    trade_loss,
)
from oracles import NORMAL_QUANTILES


def long_model(rho, seed=0):
    # 100k steps: 20 years of 5000 steps
    return MarketModel(rho=rho, steps_per_year=5000, years=20, seed=seed)


def test_perfect_correlation_copies_returns():
    r, r_hat = simulate_paths(MarketModel(rho=1.0, years=1))
    assert np.array_equal(r, r_hat)


@pytest.mark.parametrize("rho, tol", [(0.0, 0.01), (0.1, 0.01), (-0.05, 0.01)])
def test_sample_correlation(rho, tol):
    r, r_hat = simulate_paths(long_model(rho, seed=3))
    assert np.corrcoef(r, r_hat)[0, 1] == pytest.approx(rho, abs=tol)


def test_gbm_moments():
    m = long_model(0.0, seed=1)
    r, _ = simulate_paths(m)
    assert r.mean() == pytest.approx(m.mu * m.delta, abs=4 * m.scale / math.sqrt(r.size))
    assert r.std() == pytest.approx(m.scale, rel=0.01)


def test_paths_are_seed_deterministic():
    a = simulate_paths(MarketModel(seed=4, years=1))
    b = simulate_paths(MarketModel(seed=4, years=1))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_interval_at_one_collapses():
    iv = interval(0.3, 1.0, 0.2, 1 / 1764)
    assert iv.lo == pytest.approx(0.3) and iv.hi == pytest.approx(0.3)


def test_interval_nonpositive_lambda_is_whole_line():
    for lam in (0.0, -3.0):
        iv = interval(0.01, lam, 0.2, 1 / 1764)
        assert iv.lo == -math.inf and iv.hi == math.inf
        assert decide(iv) == 0


@pytest.mark.parametrize("lam, p", [(0.1, 0.95), (0.05, 0.975), (0.2, 0.9), (0.02, 0.99)])
def test_interval_matches_quantile_table(lam, p):
    iv = interval(0.0, lam, 1.0, 1.0)
    assert iv.lo == pytest.approx(-NORMAL_QUANTILES[p], abs=1e-12)
    assert iv.hi == pytest.approx(NORMAL_QUANTILES[p], abs=1e-12)


def test_interval_above_one_trades_on_point_prediction():
    for lam in (1.5, 2.0, 50.0):
        iv = interval(-0.2, lam, 0.2, 1.0)
        assert iv.empty
        assert decide(iv) == -1


@pytest.mark.parametrize("lo, hi, action", [(0.01, 0.02, 1), (-0.02, 0.01, 0), (-0.03, -0.001, -1)])
def test_decide_examples(lo, hi, action):
    assert decide(Interval(lo, hi, (lo + hi) / 2)) == action


@given(st.floats(-1, 1), st.floats(0, 1), st.floats(-1, 1))
def test_decide_antisymmetric(a, w, c):
    iv = Interval(a, a + w, c)
    assert decide(-iv) == -decide(iv)


@given(st.floats(-0.5, 0.5), st.floats(-2, 3))
def test_interval_contains_center_when_nonempty(r_hat, lam):
    iv = interval(r_hat, lam, 0.2, 1 / 1764)
    if not iv.empty:
        assert iv.lo <= r_hat <= iv.hi


@pytest.mark.parametrize("u, r, expected", [(1, -0.01, 0.01), (1, 0.02, 0.0), (0, -0.5, 0.0), (-1, 0.5, 0.1)])
def test_trade_loss_examples(u, r, expected):
    assert trade_loss(u, r, clip=0.1) == pytest.approx(expected)


def test_greedy_with_perfect_model_never_loses():
    m = MarketModel(rho=1.0, years=1, seed=2)
    cum_ret, cum_loss, _ = run_strategy(m, Strategy.GREEDY)
    r, _ = simulate_paths(m)
    assert np.all(cum_loss == 0)
    assert cum_ret[-1] == pytest.approx(np.abs(r).sum())


@pytest.mark.parametrize("rho", [-0.5, 0.0, 0.9])
def test_buy_hold_ignores_model(rho):
    m = MarketModel(rho=rho, years=1, seed=6)
    cum_ret, _, _ = run_strategy(m, Strategy.BUY_HOLD)
    r, _ = simulate_paths(m)
    assert cum_ret[-1] == pytest.approx(r.sum())
    assert np.allclose(cum_ret, np.cumsum(r))


@given(st.integers(0, 1000), st.floats(-0.3, 0.3))
def test_cc_trace_properties(seed, rho):
    m = MarketModel(rho=rho, years=1, seed=seed)
    cfg = TradingConfig(Strategy.CC)
    run = run_strategy_batch([seed], m, cfg)
    trace = run.risk_trace(0)
    clip = cfg.clip_sigmas * m.scale
    assert trace.losses.min() >= 0 and trace.losses.max() <= clip
    eps = cfg.epsilon_yearly / m.steps_per_year
    lam_next = trace.lambdas[-1] + cfg.eta * (eps - trace.losses[-1])
    T = len(trace)
    assert telescoping_risk(trace, 0.0, lam_next, cfg.eta, eps, T) == pytest.approx(empirical_risk(trace, T), abs=1e-12)
    env = SafetyEnvelope(0.0, 0.0, 1)
    for t in (1, 10, 100, T):
        assert trace.risks[t - 1] <= theorem_bound(env, 0.0, cfg.eta, eps, t, (0.0, clip)) + 1e-15


def test_strategy_ordering_good_model_small_scale():
    m = MarketModel(rho=0.1, years=5)
    seeds = range(30)
    res = {s: run_strategy_batch(seeds, m, TradingConfig(s)) for s in Strategy}
    loss = {s: r.mean_yearly_loss.mean() for s, r in res.items()}
    ret = {s: r.mean_yearly_return.mean() for s, r in res.items()}
    cc = res[Strategy.CC].mean_yearly_loss
    assert loss[Strategy.ACI] < loss[Strategy.CC] <= 0.25 + 2 * cc.std(ddof=1) / math.sqrt(cc.size)
    assert loss[Strategy.GREEDY] > 0.25
    assert ret[Strategy.GREEDY] >= ret[Strategy.CC] >= ret[Strategy.ACI]


def test_config_validation():
    with pytest.raises(ValueError, match="rho"):
        MarketModel(rho=1.5)
    with pytest.raises(ValueError, match="aci_eta"):
        TradingConfig(aci_eta=-1)
    with pytest.raises(ValueError, match="clip"):
        trade_loss(1, 0.1, 0.0)
