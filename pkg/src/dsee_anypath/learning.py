"""Link-probability estimation and exploration scheduling.

``DseeState`` implements the deterministic exploration schedule: slot ``t``
is an exploration slot whenever fewer than
``unit_count * max(1, ceil(f_scale * ln(t+1)**2))`` exploration slots have
happened so far. ``unit_count`` is ``N * N_max`` when links are treated as
independent, or ``N * 2**N_max`` for the per-hyperlink count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .topology import Link, Topology, max_out_degree

__all__ = [
    "Phase",
    "BudgetMode",
    "LinkEstimator",
    "DseeState",
    "unit_count_for",
    "exploration_budget",
    "dsee_step",
    "egreedy_step",
    "thompson_estimates",
]


class Phase(str, enum.Enum):
    EXPLORE = "explore"
    EXPLOIT = "exploit"


class BudgetMode(str, enum.Enum):
    PER_LINK = "per_link"
    PER_HYPERLINK = "per_hyperlink"


class LinkEstimator:
    """Per-link success/trial counters with a Beta prior.

    The point estimate is the posterior mean
    ``(successes + alpha) / (trials + alpha + beta)`` clamped to
    ``[min_prob, 1]``, so a link that has only failed so far never gets an
    infinite hyperlink cost.
    """

    def __init__(
        self,
        topo: Topology,
        prior_alpha: float = 1.0,
        prior_beta: float = 1.0,
        min_prob: float = 1e-3,
    ):
        if prior_alpha < 0 or prior_beta < 0:
            raise ValueError("priors must be nonnegative")
        if not 0.0 < min_prob < 1.0:
            raise ValueError(f"min_prob must lie in (0, 1), got {min_prob}")
        self.topo = topo
        self.prior_alpha = float(prior_alpha)
        self.prior_beta = float(prior_beta)
        self.min_prob = float(min_prob)
        self.successes = np.zeros(topo.link_count, dtype=np.int64)
        self.trials = np.zeros(topo.link_count, dtype=np.int64)

    def _index(self, link) -> int:
        key = (link[0], link[1])
        try:
            return self.topo.link_index[key]
        except KeyError:
            raise KeyError(f"unknown link {key[0]}->{key[1]}") from None

    def update(self, link: Link | tuple[int, int], success: bool) -> None:
        i = self._index(link)
        self.trials[i] += 1
        if success:
            self.successes[i] += 1

    def update_all(self, heard: np.ndarray) -> None:
        """One observation for every link, aligned with ``topo.links``."""
        self.trials += 1
        self.successes += np.asarray(heard, dtype=np.int64)

    def counts(self, link) -> tuple[int, int]:
        i = self._index(link)
        return int(self.successes[i]), int(self.trials[i])

    def estimate(self, link) -> float:
        i = self._index(link)
        return float(self.estimates()[i])

    def estimates(self) -> np.ndarray:
        num = self.successes + self.prior_alpha
        den = self.trials + (self.prior_alpha + self.prior_beta)
        if self.prior_alpha + self.prior_beta == 0:
            den = np.maximum(den, 1)  # untried link without prior: 0, then clamped
        return np.clip(num / den, self.min_prob, 1.0)


def unit_count_for(topo: Topology, mode: BudgetMode | str) -> int:
    mode = BudgetMode(mode)
    n_max = max_out_degree(topo)
    if mode is BudgetMode.PER_LINK:
        return topo.node_count * n_max
    return topo.node_count * 2**n_max


@dataclass
class DseeState:
    unit_count: int
    f_scale: float = 1.0
    budget_mode: BudgetMode = BudgetMode.PER_LINK
    t: int = 1
    exploration_count: int = 0

    def __post_init__(self):
        self.budget_mode = BudgetMode(self.budget_mode)
        if self.unit_count < 1:
            raise ValueError("unit_count must be positive")
        if self.f_scale <= 0:
            raise ValueError("f_scale must be positive")

    @classmethod
    def for_topology(
        cls, topo: Topology, f_scale: float = 1.0, budget_mode: BudgetMode | str = BudgetMode.PER_LINK
    ) -> "DseeState":
        return cls(unit_count_for(topo, budget_mode), f_scale, BudgetMode(budget_mode))


def exploration_budget(t: int, state: DseeState) -> int:
    if t < 1:
        raise ValueError("slots start at t = 1")
    log_term = math.log(t + 1)
    return state.unit_count * max(1, math.ceil(state.f_scale * log_term * log_term))


def dsee_step(state: DseeState) -> Phase:
    """Decide the phase of slot ``state.t`` and advance the state."""
    if state.exploration_count < exploration_budget(state.t, state):
        state.exploration_count += 1
        phase = Phase.EXPLORE
    else:
        phase = Phase.EXPLOIT
    state.t += 1
    return phase


def egreedy_step(epsilon: float, rng: np.random.Generator) -> Phase:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    return Phase.EXPLORE if rng.random() < epsilon else Phase.EXPLOIT


def thompson_estimates(est: LinkEstimator, rng: np.random.Generator) -> np.ndarray:
    """One posterior Beta draw per link, clamped like the point estimates."""
    if est.prior_alpha <= 0 or est.prior_beta <= 0:
        raise ValueError("Thompson sampling needs strictly positive priors")
    a = est.successes + est.prior_alpha
    b = est.trials - est.successes + est.prior_beta
    return np.clip(rng.beta(a, b), est.min_prob, 1.0)
