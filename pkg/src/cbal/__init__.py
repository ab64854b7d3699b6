"""Contextual bandits with active learning: an epoch-based successive-elimination
policy that sends prior information with its reward queries, plus a simulation harness."""
from .baselines import AlwaysQueryPolicy, NoPriorPolicy, OraclePolicy, make_policy
from .environment import Annotation, Landscape, annotate, mean_reward, oracle_best
from .harness import RunConfig, compare, fit_regret_exponent, run, sweep_cost
from .policy import AlgoParams, CBALPolicy, Decision, PriorInfo
from .spaces import Partition, build_partition, locate

__version__ = "0.1.0"
