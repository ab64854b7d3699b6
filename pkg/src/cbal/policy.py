"""CB-AL decision engine: per-epoch, per-context-cluster successive elimination
with cost-aware queries carrying prior information."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .spaces import Partition, Point, build_partition, cluster_center, epoch_length, locate, nominal_radius

EXPLORATION = "exploration"
EXPLOITATION = "exploitation"

ARM_PICKS = ("center", "random")
EXPLOIT_RULES = ("best", "lowest")


class StopBoundViolation(AssertionError):
    """A context cluster stopped later than the analytic stop-round bound allows."""


@dataclass(frozen=True)
class AlgoParams:
    d_X: int = 2
    d_K: int = 2
    alpha: Optional[float] = None
    gamma: Optional[float] = None
    L_X: float = 0.5
    L_K: float = 0.5
    L: Optional[float] = None
    c: float = 0.5
    eta: float = 1.0
    beta1: float = 1.0
    beta2: float = 2.0

    def __post_init__(self):
        d = self.d_X + self.d_K + 2
        if self.alpha is None:
            object.__setattr__(self, "alpha", 1.0 / d)
        if self.gamma is None:
            object.__setattr__(self, "gamma", (self.d_K + 1.0) / d)
        if self.L is None:
            object.__setattr__(self, "L", 4.0 * (self.L_X + self.L_K) + 1.0)
        self.validate()

    def validate(self) -> None:
        if self.d_X < 1 or self.d_K < 1:
            raise ValueError("dimensions d_X and d_K must be positive integers")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.L_X < 0 or self.L_K < 0:
            raise ValueError("Lipschitz constants must be non-negative")
        if not self.L > 4.0 * self.L_X + 4.0 * self.L_K:
            raise ValueError(
                f"L={self.L} must exceed 4*L_X + 4*L_K = {4.0 * self.L_X + 4.0 * self.L_K}"
            )
        if self.c <= 0 or self.eta <= 0:
            raise ValueError("cost scale c and weight eta must be positive")
        if self.beta1 < 1 or self.beta2 < 1:
            raise ValueError("cost exponents beta1, beta2 must be >= 1")

    @property
    def margin(self) -> float:
        return self.L - 4.0 * self.L_X - 4.0 * self.L_K


@dataclass(frozen=True)
class PriorInfo:
    a: float
    b: float
    delta: float


FULL_UNCERTAINTY = PriorInfo(0.0, 1.0, 0.0)


@dataclass(frozen=True, slots=True)
class Decision:
    arm: Point
    arm_cluster: int
    context_cluster: int
    query: bool
    prior: Optional[PriorInfo]
    phase: str


@dataclass
class ContextClusterState:
    m: int
    active: List[int]
    round: int = 1
    selected_this_round: set = field(default_factory=set)
    means: Dict[int, float] = field(default_factory=dict)
    counts: Dict[int, int] = field(default_factory=dict)
    stopped: bool = False
    stop_round: Optional[int] = None
    eliminated: Dict[int, int] = field(default_factory=dict)
    stop_active: Optional[List[int]] = None

    @classmethod
    def fresh(cls, m: int, n_arm_clusters: int) -> "ContextClusterState":
        arms = list(range(n_arm_clusters))
        return cls(m=m, active=arms, means=dict.fromkeys(arms, 0.0), counts=dict.fromkeys(arms, 0))

    def next_unselected(self) -> int:
        for n in self.active:
            if n not in self.selected_this_round:
                return n
        raise RuntimeError(f"round {self.round} of context cluster {self.m} is already complete")

    def empirical_best(self) -> int:
        # max() keeps the first maximum, i.e. the lowest index on ties
        means = self.means
        return max(self.active, key=means.__getitem__)

    def snapshot(self) -> dict:
        return {
            "m": self.m,
            "round": self.round,
            "active": list(self.active),
            "selected_this_round": sorted(self.selected_this_round),
            "means": {n: self.means[n] for n in self.active},
            "counts": {n: self.counts[n] for n in self.active},
            "stopped": self.stopped,
            "stop_round": self.stop_round,
            "stop_active": None if self.stop_active is None else list(self.stop_active),
            "eliminated": dict(self.eliminated),
        }


def deviation_D(s: int, T_i: int, gamma: float) -> float:
    """Hoeffding half-width after ``s`` samples in an epoch of ``T_i`` slots."""
    return math.sqrt(math.log(2.0 * T_i ** (1.0 + gamma)) / (2.0 * s))


def epsilon(i: int, params: AlgoParams) -> float:
    return params.L * nominal_radius(i, params.alpha)


def _slack(i: int, s: int, params: AlgoParams) -> float:
    rho = nominal_radius(i, params.alpha)
    return 2.0 * deviation_D(s, epoch_length(i), params.gamma) + 2.0 * params.L_X * rho + 2.0 * params.L_K * rho


def control_D1(i: int, s: int, params: AlgoParams) -> float:
    """Elimination threshold on the empirical gap."""
    return epsilon(i, params) + _slack(i, s, params)


def control_D2(i: int, s: int, params: AlgoParams) -> float:
    """Stopping threshold; negative values make stopping impossible."""
    return 2.0 * epsilon(i, params) - _slack(i, s, params)


def stop_round_bound(i: int, params: AlgoParams) -> float:
    """Smallest round count after which the stopping rule is guaranteed to fire."""
    T = epoch_length(i)
    return 8.0 * T ** (2.0 * params.alpha) * math.log(2.0 * T ** (params.gamma + 1.0)) / params.margin**2


def stop_round_limit(bound: float) -> int:
    """Integer form of the bound: the first round at which stopping is guaranteed (never below 1)."""
    return max(1, math.ceil(bound - 1e-9))


def prior_for(state: ContextClusterState, n: int, i: int, params: AlgoParams) -> PriorInfo:
    if n not in state.active:
        raise ValueError(f"arm cluster {n} is not active for context cluster {state.m}")
    if state.round == 1:
        return FULL_UNCERTAINTY
    rho = nominal_radius(i, params.alpha)
    T = epoch_length(i)
    slack = 2.0 * params.L_X * rho + 2.0 * params.L_K * rho + 2.0 * deviation_D(state.round - 1, T, params.gamma)
    mean = state.means[n]
    return PriorInfo(mean - slack, mean + slack, T ** (-(1.0 + params.gamma)))


def record_reward(state: ContextClusterState, n: int, r: float) -> ContextClusterState:
    if n in state.selected_this_round:
        raise ValueError(f"arm cluster {n} already recorded in round {state.round} of context cluster {state.m}")
    if n not in state.means:
        raise ValueError(f"unknown arm cluster {n}")
    count = state.counts[n]
    state.means[n] = (state.means[n] * count + r) / (count + 1)
    state.counts[n] = count + 1
    state.selected_this_round.add(n)
    return state


def end_of_round(state: ContextClusterState, i: int, params: AlgoParams, allow_stop: bool = True) -> ContextClusterState:
    """Eliminate clusters whose gap reaches D1, then stop if every survivor is within D2."""
    if state.selected_this_round != set(state.active):
        raise ValueError(f"round {state.round} of context cluster {state.m} is not complete")
    means = state.means
    best = means[state.empirical_best()]
    d1 = control_D1(i, state.round, params)
    survivors = []
    for n in state.active:
        if best - means[n] >= d1:
            state.eliminated[n] = state.round
        else:
            survivors.append(n)
    state.active = survivors
    if allow_stop:
        d2 = control_D2(i, state.round, params)
        if all(best - means[n] <= d2 for n in survivors):
            state.stopped = True
            state.stop_round = state.round
            state.stop_active = list(survivors)
    state.round += 1
    state.selected_this_round = set()
    return state


@dataclass
class StopEvent:
    epoch: int
    m: int
    stop_round: int
    bound: float
    survivors: List[int]


class CBALPolicy:
    """CB-AL with learned prior information.

    Call order per slot: ``step``; when the decision queries, ``observe`` with
    the revealed reward. Epoch boundaries are driven by the caller through
    ``begin_epoch``.
    """

    kind = "cbal"
    allow_stop = True
    send_prior = True

    def __init__(self, params: AlgoParams, arm_pick: str = "center", exploit: str = "best", rng: Optional[random.Random] = None):
        if arm_pick not in ARM_PICKS:
            raise ValueError(f"arm_pick must be one of {ARM_PICKS}, got {arm_pick!r}")
        if exploit not in EXPLOIT_RULES:
            raise ValueError(f"exploit must be one of {EXPLOIT_RULES}, got {exploit!r}")
        if arm_pick == "random" and rng is None:
            raise ValueError("arm_pick='random' needs a seeded rng")
        self.params = params
        self.arm_pick = arm_pick
        self.exploit = exploit
        self.rng = rng
        self.epoch: Optional[int] = None
        self.stop_events: List[StopEvent] = []

    def begin_epoch(self, i: int) -> None:
        p = self.params
        rho = nominal_radius(i, p.alpha)
        self.epoch = i
        self.T_i = epoch_length(i)
        self.context_partition: Partition = build_partition(p.d_X, rho)
        self.arm_partition: Partition = build_partition(p.d_K, rho)
        self.states: Dict[int, ContextClusterState] = {}
        self._centers = [cluster_center(n, self.arm_partition) for n in range(self.arm_partition.cluster_count)]
        self._stop_bound = stop_round_bound(i, p)
        # per-round-independent pieces of the prior interval
        self._lip_slack = 2.0 * p.L_X * rho + 2.0 * p.L_K * rho
        self._log_term = math.log(2.0 * self.T_i ** (1.0 + p.gamma))
        self._delta = self.T_i ** (-(1.0 + p.gamma))

    def state(self, m: int) -> ContextClusterState:
        # untouched clusters are materialised lazily; they are indistinguishable from initialised ones
        st = self.states.get(m)
        if st is None:
            st = self.states[m] = ContextClusterState.fresh(m, self.arm_partition.cluster_count)
        return st

    def all_states(self) -> List[ContextClusterState]:
        return [self.state(m) for m in range(self.context_partition.cluster_count)]

    def _arm_in(self, n: int) -> Point:
        if self.arm_pick == "center":
            return self._centers[n]
        lo, hi = self.arm_partition.bounds(n)
        return tuple(self.rng.uniform(a, b) for a, b in zip(lo, hi))

    def _prior(self, st: ContextClusterState, n: int) -> PriorInfo:
        if not self.send_prior or st.round == 1:
            return FULL_UNCERTAINTY
        slack = self._lip_slack + 2.0 * math.sqrt(self._log_term / (2.0 * (st.round - 1)))
        mean = st.means[n]
        return PriorInfo(mean - slack, mean + slack, self._delta)

    def step(self, x: Point) -> Decision:
        m = locate(x, self.context_partition)
        st = self.state(m)
        if st.stopped:
            n = st.empirical_best() if self.exploit == "best" else st.active[0]
            return Decision(self._arm_in(n), n, m, False, None, EXPLOITATION)
        n = st.next_unselected()
        return Decision(self._arm_in(n), n, m, True, self._prior(st, n), EXPLORATION)

    def observe(self, decision: Decision, reward: float) -> None:
        if not decision.query:
            raise ValueError("rewards are only revealed for queried slots")
        st = self.states[decision.context_cluster]
        record_reward(st, decision.arm_cluster, reward)
        if len(st.selected_this_round) == len(st.active):
            end_of_round(st, self.epoch, self.params, allow_stop=self.allow_stop)
            if st.stopped and st.stop_round == st.round - 1:
                self._check_stop(st)

    def _check_stop(self, st: ContextClusterState) -> None:
        ev = StopEvent(self.epoch, st.m, st.stop_round, self._stop_bound, list(st.stop_active))
        self.stop_events.append(ev)
        if st.stop_round > stop_round_limit(self._stop_bound):
            raise StopBoundViolation(
                f"epoch {self.epoch}, context cluster {st.m}: stopped at round {st.stop_round} "
                f"> bound {self._stop_bound:.6g}"
            )

    def snapshot(self) -> dict:
        """Key-value view of the current epoch, untouched clusters omitted."""
        return {
            "kind": self.kind,
            "epoch": self.epoch,
            "context_clusters": self.context_partition.cluster_count,
            "arm_clusters": self.arm_partition.cluster_count,
            "states": {m: self.states[m].snapshot() for m in sorted(self.states)},
        }
