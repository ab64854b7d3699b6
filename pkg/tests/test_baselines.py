
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cbal.baselines import AlwaysQueryPolicy, NoPriorPolicy, make_policy
from cbal.environment import query_cost
from cbal.harness import RunConfig, run
from cbal.policy import FULL_UNCERTAINTY, AlgoParams, CBALPolicy, ContextClusterState, deviation_D, prior_for
from cbal.spaces import nominal_radius

BASE = dict(d_X=1, horizon=3000, seed=3, record_trace=True)


def traced(policy, **kw):
    return run(RunConfig.from_flat({**BASE, **kw, "policy": policy})).replications[0]


def test_make_policy_kinds():
    p = AlgoParams()
    assert type(make_policy("cbal", p)) is CBALPolicy
    assert type(make_policy("cbal_no_prior", p)) is NoPriorPolicy
    assert type(make_policy("always_query", p)) is AlwaysQueryPolicy
    with pytest.raises(ValueError):
        make_policy("ucb", p)


def test_no_prior_costs():
    rep = traced("cbal_no_prior")
    c = AlgoParams().c
    for row in rep.trace:
        q, cost = row[6], row[7]
        assert cost == (c if q else 0.0)
    assert any(row[6] == 0 for row in rep.trace)


def test_no_prior_decisions_match_cbal():
    a, b = traced("cbal"), traced("cbal_no_prior")
    # t, epoch, m, n, phase, q, reward, mu
    key = lambda row: row[1:7] + row[8:10]
    assert [key(r) for r in a.trace] == [key(r) for r in b.trace]
    assert a.stop_events == b.stop_events
    assert a.cost != b.cost


def test_always_query_costs():
    rep = traced("always_query")
    c = AlgoParams().c
    assert all(row[6] == 1 and row[7] == c for row in rep.trace)
    assert rep.cost == pytest.approx(c * BASE["horizon"])
    assert rep.stop_events == []


def test_trace_schema_shared():
    widths = {len(r) for kind in ("cbal", "cbal_no_prior", "always_query") for r in traced(kind).trace}
    assert widths == {14}


def test_always_query_reward_dominates_lowest_index_exploitation():
    cfg = RunConfig.from_flat(dict(d_X=1, horizon=10_000, replications=20, seed=0, exploit="lowest"))
    cb = np.array([r.reward for r in run(cfg).replications])
    aq = np.array([r.reward for r in run(cfg.replace(policy="always_query")).replications])
    assert aq.mean() >= cb.mean()


@given(st.integers(4, 24), st.integers(2, 5000), st.floats(0, 1))
def test_cost_dominance(i, rnd, mean):
    p = AlgoParams(d_X=1, d_K=1)
    rho = nominal_radius(i, p.alpha)
    width = 4 * (p.L_X + p.L_K) * rho + 4 * deviation_D(rnd - 1, 2**i, p.gamma)
    st_ = ContextClusterState.fresh(0, 1)
    st_.round, st_.means[0] = rnd, mean
    cb_cost = query_cost(prior_for(st_, 0, i, p), p)
    flat = query_cost(FULL_UNCERTAINTY, p)
    assert flat == p.c
    if width < 1 - 1e-9:
        assert cb_cost < flat
    else:
        assert cb_cost >= flat * (1 - 1e-12)
