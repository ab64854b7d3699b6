"""Comparison policies sharing the CB-AL partition/elimination core."""
from __future__ import annotations

from .environment import Landscape, oracle_best
from .policy import EXPLOITATION, CBALPolicy, Decision
from .spaces import locate

POLICY_KINDS = ("cbal", "cbal_no_prior", "always_query")
DEBUG_KINDS = ("oracle",)


class NoPriorPolicy(CBALPolicy):
    """CB-AL whose queries always carry the uninformative prior (0, 1, 0)."""

    kind = "cbal_no_prior"
    send_prior = False


class AlwaysQueryPolicy(CBALPolicy):
    """Cost-oblivious contextual bandit: never stops querying, still eliminates."""

    kind = "always_query"
    send_prior = False
    allow_stop = False


class OraclePolicy(CBALPolicy):
    """Plays the best arm for every context without querying. Debug benchmark only."""

    kind = "oracle"

    def __init__(self, params, landscape: Landscape, **kwargs):
        super().__init__(params, **kwargs)
        self.landscape = landscape

    def step(self, x) -> Decision:
        k, _ = oracle_best(self.landscape, x)
        return Decision(k, locate(k, self.arm_partition), locate(x, self.context_partition), False, None, EXPLOITATION)

    def observe(self, decision, reward):
        raise RuntimeError("the oracle never queries")


def make_policy(kind: str, params, landscape: Landscape = None, **kwargs) -> CBALPolicy:
    if kind == "cbal":
        return CBALPolicy(params, **kwargs)
    if kind == "cbal_no_prior":
        return NoPriorPolicy(params, **kwargs)
    if kind == "always_query":
        return AlwaysQueryPolicy(params, **kwargs)
    if kind == "oracle":
        return OraclePolicy(params, landscape, **kwargs)
    raise ValueError(f"unknown policy {kind!r}; expected one of {POLICY_KINDS + DEBUG_KINDS}")
