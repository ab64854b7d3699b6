import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import frozen
from cbal import policy as pol
from cbal.policy import (
    EXPLORATION,
    FULL_UNCERTAINTY,
    AlgoParams,
    CBALPolicy,
    ContextClusterState,
    StopBoundViolation,
    control_D1,
    control_D2,
    deviation_D,
    end_of_round,
    epsilon,
    prior_for,
    record_reward,
    stop_round_bound,
    stop_round_limit,
)
from cbal.spaces import locate, nominal_radius

REL = 1e-9


def params(**kw):
    base = dict(d_X=2, d_K=2, alpha=1 / 6, gamma=0.5, L_X=0.5, L_K=0.5, L=5.0)
    base.update(kw)
    return AlgoParams(**base)


def test_defaults_follow_dimensions():
    p = AlgoParams(d_X=1, d_K=1, L_X=0.5, L_K=0.5)
    assert p.alpha == pytest.approx(1 / 4)
    assert p.gamma == pytest.approx(1 / 2)
    assert p.L == pytest.approx(5.0)
    p = AlgoParams(d_X=2, d_K=3, L_X=0.1, L_K=0.2)
    assert p.alpha == pytest.approx(1 / 7)
    assert p.gamma == pytest.approx(4 / 7)


@pytest.mark.parametrize("kw", [dict(L=4.0), dict(alpha=1.0), dict(gamma=0.0), dict(beta1=0.5), dict(c=0.0)])
def test_invalid_params(kw):
    with pytest.raises(ValueError):
        params(**kw)


@pytest.mark.parametrize(
    "s, T, expected",
    [(1, 1, frozen.D_1_1), (1, 64, frozen.D_1_64), (100, 64, frozen.D_100_64), (400, 4096, frozen.D_400_4096)],
)
def test_deviation(s, T, expected):
    assert deviation_D(s, T, 0.5) == pytest.approx(expected, rel=REL)


@pytest.mark.parametrize("i, expected", [(0, 5.0), (6, 2.5), (12, 1.25)])
def test_epsilon(i, expected):
    assert epsilon(i, params()) == pytest.approx(expected, rel=REL)


def test_control_functions():
    assert control_D1(6, 100, params()) == pytest.approx(frozen.D1_6_100, rel=REL)
    assert control_D1(0, 1, params(L_X=0.0, L_K=0.0)) == pytest.approx(frozen.D1_0_1_ZERO_LIP, rel=REL)
    assert control_D2(6, 100, params()) == pytest.approx(frozen.D2_6_100, rel=REL)
    assert control_D2(20, 1, params(L=4.01)) < 0


@given(st.integers(0, 20), st.integers(1, 10**5))
def test_control_identity(i, s):
    p = params()
    assert control_D1(i, s, p) > epsilon(i, p)
    assert control_D1(i, s, p) + control_D2(i, s, p) == pytest.approx(3 * epsilon(i, p), abs=1e-12)


def test_prior_round_one():
    st_ = ContextClusterState.fresh(0, 4)
    assert prior_for(st_, 2, 12, params()) == FULL_UNCERTAINTY


def test_prior_example():
    st_ = ContextClusterState.fresh(0, 4)
    st_.round = 401
    st_.means[1] = 0.6
    pr = prior_for(st_, 1, 12, params())
    assert pr.a == pytest.approx(frozen.PRIOR_A, rel=REL)
    assert pr.b == pytest.approx(frozen.PRIOR_B, rel=REL)
    assert pr.delta == pytest.approx(frozen.PRIOR_DELTA, rel=REL)


@given(st.integers(0, 20), st.integers(2, 10**4), st.floats(0, 1))
def test_prior_symmetry_and_width(i, rnd, mean):
    p = params()
    st_ = ContextClusterState.fresh(0, 1)
    st_.round = rnd
    st_.means[0] = mean
    pr = prior_for(st_, 0, i, p)
    rho = nominal_radius(i, p.alpha)
    assert (pr.a + pr.b) / 2 == pytest.approx(mean, abs=1e-12)
    width = 4 * p.L_X * rho + 4 * p.L_K * rho + 4 * deviation_D(rnd - 1, 2**i, p.gamma)
    assert pr.b - pr.a == pytest.approx(width, rel=1e-12)


def test_prior_inactive_cluster():
    st_ = ContextClusterState.fresh(0, 3)
    st_.active = [0, 2]
    with pytest.raises(ValueError):
        prior_for(st_, 1, 3, params())


def test_record_reward():
    st_ = ContextClusterState.fresh(0, 2)
    record_reward(st_, 0, 0.3)
    assert st_.means[0] == 0.3 and st_.counts[0] == 1
    st_.selected_this_round.clear()
    st_.means[1], st_.counts[1] = 0.5, 1
    record_reward(st_, 1, 0.8)
    assert st_.means[1] == pytest.approx(0.65) and st_.counts[1] == 2
    with pytest.raises(ValueError):
        record_reward(st_, 1, 0.1)


def test_record_constant_sequence():
    st_ = ContextClusterState.fresh(0, 1)
    for _ in range(10):
        record_reward(st_, 0, 1.0)
        st_.selected_this_round.clear()
    assert st_.means[0] == 1.0 and st_.counts[0] == 10


def _finished(means):
    st_ = ContextClusterState.fresh(0, len(means))
    for n, v in enumerate(means):
        record_reward(st_, n, v)
    return st_


def test_end_of_round_eliminates(monkeypatch):
    monkeypatch.setattr(pol, "control_D1", lambda i, s, p: 0.5)
    monkeypatch.setattr(pol, "control_D2", lambda i, s, p: -1.0)
    st_ = end_of_round(_finished([0.9, 0.2]), 3, params())
    assert st_.active == [0]
    assert st_.eliminated == {1: 1}
    assert st_.round == 2 and st_.selected_this_round == set()


def test_end_of_round_singleton_stops(monkeypatch):
    monkeypatch.setattr(pol, "control_D2", lambda i, s, p: 0.0)
    st_ = end_of_round(_finished([0.4]), 3, params())
    assert st_.stopped and st_.stop_round == 1 and st_.stop_active == [0]


def test_end_of_round_negative_d2_blocks(monkeypatch):
    monkeypatch.setattr(pol, "control_D1", lambda i, s, p: 0.5)
    monkeypatch.setattr(pol, "control_D2", lambda i, s, p: -0.1)
    st_ = end_of_round(_finished([0.9, 0.85]), 3, params())
    assert st_.active == [0, 1] and not st_.stopped


def test_end_of_round_requires_complete_round():
    st_ = ContextClusterState.fresh(0, 2)
    record_reward(st_, 0, 1.0)
    with pytest.raises(ValueError):
        end_of_round(st_, 0, params())


def test_end_of_round_deterministic_rewards_eliminate_first_eligible_round():
    # 1-d, epoch 16: D1 at round s is eps + 2*rho + 2*D(s); a 0/1 gap is eliminated
    # at the first round where that drops to 1 or below.
    p = AlgoParams(d_X=1, d_K=1, L_X=0.05, L_K=0.05, L=0.5)
    i = 16
    first = next(s for s in range(1, 10**6) if control_D1(i, s, p) <= 1.0)
    st_ = ContextClusterState.fresh(0, 2)
    for s in range(1, first + 1):
        assert st_.active == [0, 1]
        record_reward(st_, 0, 1.0)
        record_reward(st_, 1, 0.0)
        end_of_round(st_, i, p, allow_stop=False)
    assert st_.active == [0] and st_.eliminated == {1: first}


def test_begin_epoch():
    p = params()
    cb = CBALPolicy(p)
    cb.begin_epoch(0)
    assert cb.context_partition.cluster_count == 1 and cb.arm_partition.cluster_count == 1
    cb.begin_epoch(12)
    assert cb.context_partition.cluster_count == 4 and cb.arm_partition.cluster_count == 4
    st_ = cb.state(0)
    record_reward(st_, 0, 1.0)
    cb.begin_epoch(13)
    assert cb.state(0).means[0] == 0.0 and cb.state(0).round == 1 and not cb.state(0).stopped


def test_step_round_robin():
    cb = CBALPolicy(params())
    cb.begin_epoch(12)
    x = (0.1, 0.1)
    picked = []
    for _ in range(4):
        d = cb.step(x)
        assert d.query and d.phase == EXPLORATION and d.prior == FULL_UNCERTAINTY
        picked.append(d.arm_cluster)
        cb.observe(d, 0.5)
    assert picked == [0, 1, 2, 3]
    assert cb.state(0).round == 2


def test_step_stopped_exploits_without_query():
    for rule in ("best", "lowest"):
        cb = CBALPolicy(params(), exploit=rule)
        cb.begin_epoch(12)
        st_ = cb.state(0)
        st_.active, st_.stopped, st_.stop_round = [2], True, 3
        d = cb.step((0.1, 0.1))
        assert d.arm_cluster == 2 and not d.query and d.prior is None and d.phase == pol.EXPLOITATION


def test_exploit_rules_differ():
    cb = CBALPolicy(params(), exploit="best")
    cb.begin_epoch(12)
    st_ = cb.state(0)
    st_.active, st_.stopped = [0, 3], True
    st_.means.update({0: 0.2, 3: 0.7})
    assert cb.step((0.1, 0.1)).arm_cluster == 3
    cb.exploit = "lowest"
    assert cb.step((0.1, 0.1)).arm_cluster == 0


def test_interleaved_context_clusters_are_independent():
    cb = CBALPolicy(params())
    cb.begin_epoch(12)
    a, b = (0.1, 0.1), (0.9, 0.9)
    for x in (a, b, a, a, b):
        cb.observe(cb.step(x), 1.0)
    assert cb.state(locate(a, cb.context_partition)).selected_this_round == {0, 1, 2}
    assert cb.state(locate(b, cb.context_partition)).selected_this_round == {0, 1}


def test_random_arm_pick_stays_in_cell():
    cb = CBALPolicy(params(), arm_pick="random", rng=np.random.default_rng(3))
    cb.begin_epoch(12)
    for _ in range(50):
        d = cb.step((0.3, 0.6))
        lo, hi = cb.arm_partition.bounds(d.arm_cluster)
        assert all(l <= k <= h for l, k, h in zip(lo, d.arm, hi))
        if d.query:
            cb.observe(d, 0.0)
        else:
            with pytest.raises(ValueError):
                cb.observe(d, 0.0)


def test_stop_bound_assertion():
    p = params()
    assert stop_round_bound(0, p) == pytest.approx(8 * math.log(2))
    assert stop_round_limit(0.3) == 1 and stop_round_limit(5.5) == 6 and stop_round_limit(6.0) == 6
    cb = CBALPolicy(p)
    cb.begin_epoch(0)
    st_ = cb.state(0)
    st_.stopped, st_.stop_round, st_.stop_active = True, 7, [0]
    with pytest.raises(StopBoundViolation):
        cb._check_stop(st_)


def test_snapshot_is_plain_data():
    cb = CBALPolicy(params())
    cb.begin_epoch(12)
    cb.observe(cb.step((0.2, 0.2)), 1.0)
    snap = cb.snapshot()
    assert snap["epoch"] == 12 and snap["states"][0]["selected_this_round"] == [0]
    assert snap["states"][0]["counts"] == {0: 1, 1: 0, 2: 0, 3: 0}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 1), (2, 2)]), st.floats(4.2, 12.0), st.integers(4, 13))
def test_state_machine_invariants(seed, dims, L, epoch):
    p = AlgoParams(d_X=dims[0], d_K=dims[1], L_X=0.5, L_K=0.5, L=L)
    rng = np.random.default_rng(seed)
    cb = CBALPolicy(p)
    cb.begin_epoch(epoch)
    previous = {}
    for _ in range(min(2**epoch, 1500)):
        x = tuple(rng.random(p.d_X).tolist())
        d = cb.step(x)
        assert d.query == (d.phase == EXPLORATION) == (d.prior is not None)
        lo, hi = cb.arm_partition.bounds(d.arm_cluster)
        assert all(l <= k <= h for l, k, h in zip(lo, d.arm, hi))
        if d.query:
            assert d.prior.a <= d.prior.b
            st_ = cb.states[d.context_cluster]
            competing = list(st_.active)
            round_before = st_.round
            cb.observe(d, float(rng.random() < 0.6))
            if st_.round != round_before:
                top = max(st_.means[n] for n in competing)
                assert any(st_.means[n] == top for n in st_.active)
        for m, st_ in cb.states.items():
            assert st_.selected_this_round <= set(st_.active)
            assert st_.active
            for n in st_.active:
                expect = st_.round if n in st_.selected_this_round else st_.round - 1
                assert st_.counts[n] == expect
                if st_.counts[n]:
                    assert 0.0 <= st_.means[n] <= 1.0
            if m in previous:
                assert set(st_.active) <= previous[m]
            previous[m] = set(st_.active)
            if st_.stopped:
                assert st_.stop_round is not None
