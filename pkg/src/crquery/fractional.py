"""Fractional partitions and the linear program for the optimum query exponent.

The family of admissible subsets for a target set A is every nonempty proper
B of {1..m} that does not contain A. A fractional partition puts weights
lam_B >= 0 on the family with sum_{B contains i} lam_B = 1 for every terminal
i (so lam_B <= 1 automatically). The query exponent is

    E* = H(X_M) - max_lam sum_B lam_B H(X_B | X_{B^c}),

which equals the secret key capacity of the source model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import simplex
from .errors import ContractError, DegenerateDualError, ResourceError, ValidationError
from .pmf import JointPmf, as_subset, entropy, mask_subset, subset_mask

MAX_M = 16
CONSTRAINT_TOL = 1e-9


@dataclass(frozen=True)
class SubsetFamily:
    m: int
    A: tuple[int, ...]
    members: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def incidence(self) -> np.ndarray:
        """m x |family| 0/1 matrix; row i-1 marks members containing terminal i."""
        inc = np.zeros((self.m, len(self.members)), dtype=int)
        for j, B in enumerate(self.members):
            for i in B:
                inc[i - 1, j] = 1
        return inc

    def complement(self, B: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.m + 1) if i not in B)


def enumerate_family(m: int, A: Iterable[int]) -> SubsetFamily:
    """All B with {} != B != M and A not a subset of B, by ascending bitmask."""
    if not 2 <= m <= MAX_M:
        raise ResourceError(f"m={m} outside supported range 2..{MAX_M}")
    A = as_subset(A, m)
    a_mask = subset_mask(A)
    full = (1 << m) - 1
    members = tuple(
        mask_subset(mask, m) for mask in range(1, full) if mask & a_mask != a_mask
    )
    return SubsetFamily(m, A, members)


@dataclass(frozen=True)
class FractionalPartition:
    family: SubsetFamily
    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.family),):
            raise ValidationError("one weight per family member required")
        if np.any(w < -CONSTRAINT_TOL) or np.any(w > 1 + CONSTRAINT_TOL):
            raise ValidationError("weights must lie in [0, 1]")
        cover = self.family.incidence() @ w
        if np.any(np.abs(cover - 1) > CONSTRAINT_TOL):
            raise ValidationError(f"weights do not cover every terminal once: {cover}")
        object.__setattr__(self, "weights", tuple(float(v) for v in np.clip(w, 0, 1)))

    @property
    def lambda_sum(self) -> float:
        return math.fsum(self.weights)

    def items(self):
        return zip(self.family.members, self.weights)

    def support(self) -> list[tuple[tuple[int, ...], float]]:
        return [(B, w) for B, w in self.items() if w > CONSTRAINT_TOL]


@dataclass(frozen=True)
class DualPartition:
    """Weights on complements B^c: lam_B / (lam_sum - 1)."""

    m: int
    complements: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]

    def items(self):
        return zip(self.complements, self.weights)


def dual_of(fp: FractionalPartition) -> DualPartition:
    excess = fp.lambda_sum - 1
    if excess <= CONSTRAINT_TOL:
        raise DegenerateDualError(f"dual partition needs lambda_sum > 1, got {fp.lambda_sum}")
    comps = tuple(fp.family.complement(B) for B in fp.family.members)
    w = tuple(v / excess for v in fp.weights)
    m = fp.family.m
    for i in range(1, m + 1):
        cover = math.fsum(v for C, v in zip(comps, w) if i in C)
        if abs(cover - 1) > CONSTRAINT_TOL:
            raise ContractError(f"dual weights cover terminal {i} with total {cover}")
    return DualPartition(m, comps, w)


def _lp(p: JointPmf, A, objective: str, exact: bool):
    fam = enumerate_family(p.m, A)
    if not fam.members:
        raise ValidationError("subset family is empty")
    M = tuple(range(1, p.m + 1))
    h_full = entropy(p, M)
    h_comp = np.array([entropy(p, fam.complement(B)) for B in fam.members])
    if objective == "max":
        # maximize sum lam_B H(X_B|X_B^c) = lam_B (H(M) - H(B^c))
        c = -(h_full - h_comp)
    else:
        # minimize sum lam_B (H(B^c) - H(M)); the constant H(M) is added back
        c = h_comp - h_full
    res = simplex.solve(c, fam.incidence(), np.ones(p.m), exact=exact)
    fp = FractionalPartition(fam, tuple(res.x))
    return fam, fp, res, h_full


def solve_lp(p: JointPmf, A: Iterable[int], exact: bool = False) -> tuple[FractionalPartition, float]:
    """Optimal fractional partition and max sum_B lam_B H(X_B | X_{B^c}).

    Only the optimal value is contract-bearing; when the program has several
    optimal vertices the one reached by Bland's pivot order is returned.
    """
    _, fp, res, _ = _lp(p, A, "max", exact)
    return fp, -res.value


def exponent_from_value(p: JointPmf, value: float) -> float:
    """H(X_M) minus the program value, clamped to [0, log|X_M|]."""
    e = entropy(p, range(1, p.m + 1)) - value
    return min(max(e, 0.0), math.log2(len(p.probs)))


def query_exponent(p: JointPmf, A: Iterable[int], exact: bool = False) -> float:
    if p.m < 2:
        raise ValidationError("source model needs at least two terminals")
    return exponent_from_value(p, solve_lp(p, A, exact)[1])


def query_exponent_alt(p: JointPmf, A: Iterable[int], exact: bool = False) -> float:
    """min_lam [sum_B lam_B H(X_{B^c}) - (lam_sum - 1) H(X_M)], solved as its own program."""
    if p.m < 2:
        raise ValidationError("source model needs at least two terminals")
    _, fp, res, h_full = _lp(p, A, "min", exact)
    return res.value + h_full


def omniscience_rate(p: JointPmf, A: Iterable[int], exact: bool = False) -> float:
    """Minimum communication rate for omniscience: max_lam sum lam_B H(X_B|X_B^c)."""
    return solve_lp(p, A, exact)[1]
