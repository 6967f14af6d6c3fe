"""Finite-alphabet probability arithmetic.

Terminals are labelled 1..m throughout (same labels as on the command line).
All logarithms are base 2. ``0 log 0`` is taken as 0.
"""
from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import AbsoluteContinuityError, ResourceError, ValidationError

MAX_ATOMS = 2**24
SUM_TOL = 1e-9
PRUNE = 1e-15


def as_subset(S: Iterable[int], m: int) -> tuple[int, ...]:
    """Validate a set of 1-based terminal labels and return it sorted."""
    out = tuple(sorted({int(i) for i in S}))
    if not out:
        raise ValidationError("subset must be nonempty")
    if out[0] < 1 or out[-1] > m:
        raise ValidationError(f"subset {out} not inside 1..{m}")
    return out


def subset_mask(S: Iterable[int]) -> int:
    return sum(1 << (i - 1) for i in S)


def mask_subset(mask: int, m: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(m) if mask >> i & 1)


def nonempty_subsets(m: int) -> list[tuple[int, ...]]:
    return [mask_subset(mask, m) for mask in range(1, 1 << m)]


@dataclass(frozen=True)
class JointPmf:
    """Dense joint pmf of m finite-valued terminals, stored row-major."""

    alphabet_sizes: tuple[int, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        sizes = tuple(int(a) for a in self.alphabet_sizes)
        if not sizes or any(a < 1 for a in sizes):
            raise ValidationError(f"alphabet sizes must be positive, got {sizes}")
        n_atoms = math.prod(sizes)
        if n_atoms > MAX_ATOMS:
            raise ResourceError(f"joint alphabet has {n_atoms} atoms; limit is 2^24")
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if probs.size != n_atoms:
            raise ValidationError(f"expected {n_atoms} probabilities, got {probs.size}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValidationError("probabilities must be finite and nonnegative")
        total = probs.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"probabilities sum to {float(total):.12g}, not 1")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "alphabet_sizes", sizes)
        object.__setattr__(self, "probs", probs)

    @property
    def m(self) -> int:
        return len(self.alphabet_sizes)

    @property
    def table(self) -> np.ndarray:
        return self.probs.reshape(self.alphabet_sizes)

    @classmethod
    def from_table(cls, table) -> "JointPmf":
        table = np.asarray(table, dtype=float)
        return cls(table.shape, table.reshape(-1))

    @classmethod
    def from_json(cls, obj: Mapping) -> "JointPmf":
        try:
            return cls(tuple(obj["alphabet_sizes"]), np.asarray(obj["probs"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed pmf object: {exc}") from exc

    @classmethod
    def load(cls, path) -> "JointPmf":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: {exc}") from exc
        return cls.from_json(obj)

    def to_json(self) -> dict:
        return {"alphabet_sizes": list(self.alphabet_sizes), "probs": self.probs.tolist()}


def product_pmf(*factors) -> JointPmf:
    """Joint pmf of independent terminals with the given 1-D marginals."""
    table = np.asarray(factors[0], dtype=float)
    for f in factors[1:]:
        table = np.multiply.outer(table, np.asarray(f, dtype=float))
    return JointPmf.from_table(table)


def dsbs(p: float) -> JointPmf:
    """Doubly symmetric binary source: X1 uniform, X2 = X1 xor Bern(p)."""
    return JointPmf.from_table([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])


def _entropy_of(probs: np.ndarray) -> float:
    probs = np.asarray(probs, dtype=float).reshape(-1)
    nz = probs[probs > 0]
    return float(-(nz * np.log2(nz)).sum())


def marginal_table(p: JointPmf, S: Iterable[int]) -> np.ndarray:
    S = as_subset(S, p.m)
    drop = tuple(i for i in range(p.m) if i + 1 not in S)
    return p.table.sum(axis=drop) if drop else p.table


def marginal(p: JointPmf, S: Iterable[int]) -> JointPmf:
    """Marginal on S, coordinates kept in ascending terminal order."""
    return JointPmf.from_table(marginal_table(p, S))


def entropy(p: JointPmf, S: Iterable[int]) -> float:
    return _entropy_of(marginal_table(p, S))


def conditional_entropy(p: JointPmf, B: Iterable[int], given: Iterable[int]) -> float:
    """H(X_B | X_given) = H(X_B, X_given) - H(X_given)."""
    B, given = as_subset(B, p.m), as_subset(given, p.m)
    if set(B) & set(given):
        raise ValidationError(f"subsets {B} and {given} overlap")
    return entropy(p, B + given) - entropy(p, given)


def mutual_information(p: JointPmf, S1: Iterable[int], S2: Iterable[int]) -> float:
    S1, S2 = as_subset(S1, p.m), as_subset(S2, p.m)
    return entropy(p, S1) + entropy(p, S2) - entropy(p, S1 + S2)


class Measure:
    """Nonnegative finite measure on a discrete set (total need not be 1)."""

    __slots__ = ("_weights",)

    def __init__(self, weights: Mapping):
        w = {}
        for key, val in dict(weights).items():
            val = float(val)
            if not math.isfinite(val) or val < 0:
                raise ValidationError(f"mass of {key!r} is {val}; must be finite and >= 0")
            w[key] = val
        self._weights = w

    @classmethod
    def from_array(cls, masses) -> "Measure":
        return cls({i: float(v) for i, v in enumerate(np.asarray(masses, dtype=float).reshape(-1))})

    @property
    def weights(self) -> dict:
        return dict(self._weights)

    @property
    def total(self) -> float:
        return math.fsum(self._weights.values())

    def masses(self) -> np.ndarray:
        return np.fromiter(self._weights.values(), dtype=float, count=len(self._weights))

    def keys(self):
        return self._weights.keys()

    def items(self):
        return self._weights.items()

    def __getitem__(self, key):
        return self._weights.get(key, 0.0)

    def __len__(self):
        return len(self._weights)

    def __repr__(self):
        return f"Measure({self._weights!r})"


def _as_measure(mu) -> Measure:
    if isinstance(mu, Measure):
        return mu
    if isinstance(mu, JointPmf):
        return Measure.from_array(mu.probs)
    if isinstance(mu, Mapping):
        return Measure(mu)
    return Measure.from_array(mu)


def _paired(p, q) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, (Measure, Mapping)) or isinstance(q, (Measure, Mapping)):
        p, q = _as_measure(p), _as_measure(q)
        keys = list(dict.fromkeys(itertools.chain(p.keys(), q.keys())))
        return np.array([p[k] for k in keys]), np.array([q[k] for k in keys])
    if isinstance(p, JointPmf):
        p = p.probs
    if isinstance(q, JointPmf):
        q = q.probs
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if p.shape != q.shape:
        raise ValidationError(f"ground sets differ: {p.shape} vs {q.shape}")
    return p, q


def kl_divergence(p, q) -> float:
    """D(p || q) in bits for two pmfs on a common ground set."""
    p, q = _paired(p, q)
    for name, v in (("p", p), ("q", q)):
        if abs(v.sum() - 1.0) > SUM_TOL:
            raise ValidationError(f"{name} sums to {float(v.sum()):.12g}, not 1")
    p = np.where(p < PRUNE, 0.0, p)
    q = np.where(q < PRUNE, 0.0, q)
    support = p > 0
    if np.any(q[support] == 0):
        raise AbsoluteContinuityError("support of p is not contained in support of q")
    return max(0.0, float((p[support] * np.log2(p[support] / q[support])).sum()))


def renyi_entropy(mu, alpha: float) -> float:
    """Renyi entropy of order alpha (alpha >= 0, alpha != 1) of a nonnegative measure."""
    alpha = float(alpha)
    if alpha < 0 or alpha == 1.0:
        raise ValidationError(f"Renyi order must be >= 0 and != 1, got {alpha}")
    m = _as_measure(mu).masses()
    m = m[m > 0]
    if m.size == 0:
        raise ValidationError("measure has zero total mass")
    if alpha == 0:
        return math.log2(m.size)
    # log-sum-exp keeps large orders finite
    logs = alpha * np.log2(m)
    top = logs.max()
    return float((top + np.log2(np.exp2(logs - top).sum())) / (1.0 - alpha))


def likelihood_ratio_set(q1, q2, delta: float) -> frozenset:
    """Elements v with q1(v) >= delta * q2(v); their q1-mass is at least 1 - delta."""
    if not 0 < delta < 1:
        raise ValidationError(f"delta must lie in (0,1), got {delta}")
    if isinstance(q1, (Measure, Mapping)) or isinstance(q2, (Measure, Mapping)):
        q1, q2 = _as_measure(q1), _as_measure(q2)
        keys = list(dict.fromkeys(itertools.chain(q1.keys(), q2.keys())))
        return frozenset(k for k in keys if q1[k] >= delta * q2[k])
    a, b = _paired(q1, q2)
    return frozenset(int(i) for i in np.flatnonzero(a >= delta * b))


@dataclass(frozen=True)
class TypicalSet:
    """Entropy-typical sequences: every subset marginal has empirical rate within delta."""

    base: JointPmf
    n: int
    delta: float

    def __post_init__(self):
        if self.n < 1 or self.delta <= 0:
            raise ValidationError("typical set needs n >= 1 and delta > 0")

    @functools.cached_property
    def _marginals(self):
        out = []
        for S in nonempty_subsets(self.base.m):
            tab = marginal_table(self.base, S)
            out.append((tuple(i - 1 for i in S), tab, _entropy_of(tab)))
        return out

    def __contains__(self, x) -> bool:
        return typical_membership(self, x)


def typical_membership(t: TypicalSet, x) -> bool:
    """x: integer array of shape (n, m), row t holding the symbols at time t."""
    x = np.asarray(x)
    if x.shape != (t.n, t.base.m):
        raise ValidationError(f"sequence shape {x.shape} != {(t.n, t.base.m)}")
    if np.any(x < 0) or np.any(x >= np.array(t.base.alphabet_sizes)):
        raise ValidationError("symbol index out of range")
    with np.errstate(divide="ignore"):
        for cols, tab, H in t._marginals:
            p = tab[tuple(x[:, c] for c in cols)]
            if np.any(p == 0):
                return False
            rate = -np.log2(p).sum() / t.n
            if abs(rate - H) > t.delta:
                return False
    return True
