"""Query strategies and the posterior/rank equivalence checks.

A query strategy is, for every observed communication value v, a bijection
from candidate values u to ranks 1..|U|; the querier asks "is U = u?" in rank
order. Sorting candidates by descending posterior P(u|v) maximizes
P(q(U|V) <= g) simultaneously for every g, so it is used as the witness
whenever a statement quantifies over all strategies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np

from .errors import ResourceError, ValidationError

POSTERIOR_TOL = 1e-9
MAX_JOINT_ATOMS = 2**16


@dataclass(frozen=True)
class QueryStrategy:
    ranks: Mapping[Hashable, Mapping[Hashable, int]]

    def __post_init__(self):
        for v, r in self.ranks.items():
            if sorted(r.values()) != list(range(1, len(r) + 1)):
                raise ValidationError(f"ranks for communication value {v!r} are not a bijection onto 1..{len(r)}")

    def order(self, v) -> list:
        r = self.ranks[v]
        return sorted(r, key=r.__getitem__)

    def within(self, v, gamma: float) -> int:
        """|{u : q(u|v) <= gamma}|, never more than gamma."""
        return sum(1 for rank in self.ranks[v].values() if rank <= gamma)


def _sorted_values(values):
    try:
        return sorted(values)
    except TypeError:
        return sorted(values, key=repr)


def optimal_strategy(posterior: Mapping[Hashable, Mapping[Hashable, float]]) -> QueryStrategy:
    """Descending posterior per communication value; ties by ascending value."""
    ranks = {}
    for v, post in posterior.items():
        total = math.fsum(post.values())
        if abs(total - 1) > POSTERIOR_TOL:
            raise ValidationError(f"posterior given {v!r} sums to {total}")
        lex = {u: i for i, u in enumerate(_sorted_values(post))}
        order = sorted(post, key=lambda u: (-post[u], lex[u]))
        ranks[v] = {u: i + 1 for i, u in enumerate(order)}
    return QueryStrategy(ranks)


def query_count(q: QueryStrategy, l, i) -> int:
    try:
        return q.ranks[i][l]
    except KeyError:
        raise ValidationError(f"value {l!r} not in the strategy domain for {i!r}") from None


def posterior_from_joint(joint) -> dict:
    """{v: {u: P(u|v)}} from a |U| x |V| joint table (columns with P(v) = 0 dropped)."""
    joint = np.asarray(joint, dtype=float)
    pv = joint.sum(axis=0)
    return {
        v: {u: float(joint[u, v] / pv[v]) for u in range(joint.shape[0])}
        for v in range(joint.shape[1]) if pv[v] > 0
    }


def optimal_ranks(cond: np.ndarray) -> np.ndarray:
    """Rank table for a |U| x |V| conditional matrix, same order as optimal_strategy."""
    cond = np.asarray(cond, dtype=float)
    ranks = np.empty(cond.shape, dtype=np.int64)
    u = np.arange(cond.shape[0])
    for v in range(cond.shape[1]):
        order = np.lexsort((u, -cond[:, v]))
        ranks[order, v] = u + 1
    return ranks


def _rank_tables(joint, delta):
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2:
        raise ValidationError("joint of (U, V) must be a 2-D table")
    if joint.size > MAX_JOINT_ATOMS:
        raise ResourceError(f"|U||V| = {joint.size} exceeds 2^16")
    if abs(joint.sum() - 1) > POSTERIOR_TOL or np.any(joint < 0):
        raise ValidationError("joint must be a pmf")
    if not 0 < delta < 0.5:
        raise ValidationError(f"delta must lie in (0, 1/2), got {delta}")
    pv = joint.sum(axis=0)
    cond = np.divide(joint, pv, out=np.zeros_like(joint), where=pv > 0)
    return joint, cond, optimal_ranks(cond)


@dataclass(frozen=True)
class TailImplication:
    hypothesis: bool
    conclusion: bool
    small_posterior_mass: float
    query_tail: float

    @property
    def holds(self) -> bool:
        return (not self.hypothesis) or self.conclusion


def posterior_to_rank_tail(joint, gamma: float, delta: float) -> TailImplication:
    """If P(P_{U|V} <= delta/gamma) >= 1 - delta then P(q(U|V) >= gamma) >= 1 - 2 delta."""
    joint, cond, ranks = _rank_tables(joint, delta)
    small = float(joint[cond <= delta / gamma].sum())
    tail = float(joint[ranks >= gamma].sum())
    return TailImplication(small >= 1 - delta, tail >= 1 - 2 * delta, small, tail)


def rank_tail_to_posterior(joint, gamma: float, delta: float) -> TailImplication:
    """If P(q(U|V) >= gamma) >= 1 - (1 - sqrt(delta))^2 for the best q then P(P_{U|V} <= 1/gamma) >= delta."""
    joint, cond, ranks = _rank_tables(joint, delta)
    tail = float(joint[ranks >= gamma].sum())
    small = float(joint[cond <= 1 / gamma].sum())
    return TailImplication(tail >= 1 - (1 - math.sqrt(delta)) ** 2, small >= delta, small, tail)


def lemma2_forward_check(joint_uv, gamma: float, delta: float) -> bool:
    return posterior_to_rank_tail(joint_uv, gamma, delta).holds


def lemma2_converse_check(joint_uv, gamma: float, delta: float) -> bool:
    return rank_tail_to_posterior(joint_uv, gamma, delta).holds
