"""Synthetic Lipschitz reward landscapes, Bernoulli rewards and the cost-charging annotator."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .policy import AlgoParams, PriorInfo
from .spaces import Point, dist_inf

FAMILIES = ("peak", "dome")


@dataclass(frozen=True)
class Landscape:
    """Expected reward mu(x, k) = max(0, 1 - lam * g(dist(k, x))).

    ``peak`` uses g(d) = d, ``dome`` uses g(d) = d**2. Both put the best arm at
    k = x with reward 1, which keeps the regret benchmark exact.
    """

    family: str = "peak"
    lam: float = 0.5
    d_X: int = 2
    d_K: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown landscape family {self.family!r}; expected one of {FAMILIES}")
        if self.lam <= 0:
            raise ValueError(f"steepness must be positive, got {self.lam}")
        if self.d_X != self.d_K:
            raise ValueError(f"{self.family} landscape compares x with k and needs d_X == d_K")

    @property
    def L_X(self) -> float:
        return self.lam if self.family == "peak" else 2.0 * self.lam

    @property
    def L_K(self) -> float:
        return self.L_X


@dataclass(frozen=True)
class Annotation:
    reward: float
    cost: float
    prior_valid: Optional[bool]


def mean_reward(land: Landscape, x: Sequence[float], k: Sequence[float]) -> float:
    if len(x) != land.d_X or len(k) != land.d_K:
        raise ValueError(f"expected x in {land.d_X}-d and k in {land.d_K}-d, got {len(x)} and {len(k)}")
    d = dist_inf(k, x)
    if land.family == "dome":
        d = d * d
    return max(0.0, 1.0 - land.lam * d)


def sample_reward(mu: float, rng: np.random.Generator) -> float:
    return 1.0 if rng.random() < mu else 0.0


def query_cost(prior: PriorInfo, params: AlgoParams) -> float:
    return params.c * ((prior.b - prior.a) ** params.beta1 + params.eta * prior.delta**params.beta2)


def annotate(prior: Optional[PriorInfo], truth: float, mu: float, params: AlgoParams) -> Annotation:
    """Charge a query and reveal ``truth``; with no prior nothing was asked and nothing is charged."""
    if prior is None:
        return Annotation(truth, 0.0, None)
    return Annotation(truth, query_cost(prior, params), prior.a <= mu <= prior.b)


def oracle_best(land: Landscape, x: Sequence[float]) -> Tuple[Point, float]:
    return tuple(float(c) for c in x), 1.0


def _lattice(lo: Sequence[float], hi: Sequence[float], grid_n: int):
    axes = [np.linspace(a, b, grid_n) for a, b in zip(lo, hi)]
    return list(itertools.product(*axes))


def cluster_oracle(land: Landscape, context_cell, arm_cell, grid_n: int = 9) -> float:
    """Lattice approximation of max mu over a (context cell, arm cell) pair.

    Cells are ``(lower_corner, upper_corner)`` pairs.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    xs = _lattice(*context_cell, grid_n)
    ks = _lattice(*arm_cell, grid_n)
    return max(mean_reward(land, x, k) for x in xs for k in ks)


def context_arrival(rng: np.random.Generator, d_X: int) -> Point:
    return tuple(rng.random(d_X).tolist())
