"""Set-partition forms of the query exponent (target set = all terminals).

For a partition pi = (pi_1, ..., pi_k) of {1..m} with k >= 2 parts,

    D(P_{X_M} || prod_i P_{X_pi_i}) / (k - 1)

minimized over pi gives E* when A = M. The Gaussian counterpart replaces the
divergence by half the log-ratio of block determinants to the full one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .errors import DefinitenessError, ResourceError, ValidationError
from .pmf import JointPmf, entropy

MAX_PARTITION_M = 12


@dataclass(frozen=True)
class SetPartition:
    m: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(b)) for b in self.blocks)
        if any(not b for b in blocks):
            raise ValidationError("partition blocks must be nonempty")
        flat = sorted(i for b in blocks for i in b)
        if flat != list(range(1, self.m + 1)):
            raise ValidationError(f"blocks {blocks} do not partition 1..{self.m}")
        if len(blocks) < 2:
            raise ValidationError("the trivial one-block partition is excluded")
        object.__setattr__(self, "blocks", tuple(sorted(blocks, key=lambda b: b[0])))

    @property
    def k(self) -> int:
        return len(self.blocks)

    def relabel(self, perm: dict[int, int]) -> "SetPartition":
        return SetPartition(self.m, tuple(tuple(perm[i] for i in b) for b in self.blocks))

    def __str__(self):
        return "".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)


def restricted_growth_strings(m: int) -> Iterator[tuple[int, ...]]:
    """All restricted growth strings of length m in lexicographic order."""
    a = [0] * m
    maxes = [0] * m  # maxes[i] = max(a[0..i])
    while True:
        yield tuple(a)
        i = m - 1
        while i > 0 and a[i] == maxes[i - 1] + 1:
            i -= 1
        if i == 0:
            return
        a[i] += 1
        maxes[i] = max(maxes[i - 1], a[i])
        for j in range(i + 1, m):
            a[j] = 0
            maxes[j] = maxes[i]


def enumerate_partitions(m: int) -> list[SetPartition]:
    """All Bell(m) - 1 nontrivial partitions of {1..m} in canonical (RGS) order."""
    if not 2 <= m <= MAX_PARTITION_M:
        raise ResourceError(f"partition enumeration supports 2 <= m <= {MAX_PARTITION_M}, got {m}")
    out = []
    for rgs in restricted_growth_strings(m):
        k = max(rgs) + 1
        if k < 2:
            continue
        blocks = [[] for _ in range(k)]
        for i, label in enumerate(rgs):
            blocks[label].append(i + 1)
        out.append(SetPartition(m, tuple(tuple(b) for b in blocks)))
    return out


def _argmin(partitions, fn: Callable[[SetPartition], float]) -> tuple[float, SetPartition]:
    # strict < keeps the canonical-order-first minimizer
    best_val, best = math.inf, None
    for pi in partitions:
        v = fn(pi)
        if v < best_val:
            best_val, best = v, pi
    return best_val, best


def partition_divergence(p: JointPmf, pi: SetPartition) -> float:
    """D(P || prod_i P_{pi_i}) via sum_i H(X_pi_i) - H(X_M)."""
    full = entropy(p, range(1, p.m + 1))
    return max(0.0, sum(entropy(p, b) for b in pi.blocks) - full)


def divergence_exponent(p: JointPmf) -> tuple[float, SetPartition]:
    """Minimum of D(P || prod P_{pi_i}) / (|pi| - 1) and a minimizing partition."""
    if p.m < 2:
        raise ValidationError("need at least two terminals")
    return _argmin(enumerate_partitions(p.m), lambda pi: partition_divergence(p, pi) / (pi.k - 1))


@dataclass(frozen=True)
class CovarianceMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        S = np.array(self.matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 2:
            raise ValidationError(f"covariance must be square with dimension >= 2, got shape {S.shape}")
        if not np.all(np.isfinite(S)):
            raise ValidationError("covariance has non-finite entries")
        if np.max(np.abs(S - S.T)) > 1e-12:
            raise ValidationError("covariance is not symmetric")
        S = (S + S.T) / 2
        log_det2(S)  # raises if not positive definite
        S.setflags(write=False)
        object.__setattr__(self, "matrix", S)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def block(self, idx) -> np.ndarray:
        ix = [i - 1 for i in idx]
        return self.matrix[np.ix_(ix, ix)]


def log_det2(S: np.ndarray) -> float:
    """log2 det via Cholesky; raises DefinitenessError when S is not PD."""
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError("matrix is not positive definite") from exc
    d = np.diag(L)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise DefinitenessError("matrix is not positive definite")
    return float(2 * np.log2(d).sum())


def gaussian_partition_value(sigma: CovarianceMatrix, pi: SetPartition) -> float:
    if pi.m != sigma.m:
        raise ValidationError(f"partition of {pi.m} terminals for a {sigma.m}x{sigma.m} covariance")
    ratio = sum(log_det2(sigma.block(b)) for b in pi.blocks) - log_det2(sigma.matrix)
    return max(0.0, ratio / (2 * (pi.k - 1)))


def gaussian_argmin(sigma: CovarianceMatrix) -> tuple[float, SetPartition]:
    return _argmin(enumerate_partitions(sigma.m), lambda pi: gaussian_partition_value(sigma, pi))


def gaussian_exponent(sigma, pi: SetPartition | None = None) -> float:
    """Gaussian secret key capacity / query exponent bound in bits per sample."""
    if not isinstance(sigma, CovarianceMatrix):
        sigma = CovarianceMatrix(sigma)
    if pi is not None:
        return gaussian_partition_value(sigma, pi)
    return gaussian_argmin(sigma)[0]
