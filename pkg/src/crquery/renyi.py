"""Large-probability sets sized by Renyi entropy, and block source-coding rates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .pmf import Measure, _as_measure, renyi_entropy


def _exp2(x: float) -> float:
    # saturates instead of raising; the bound is then vacuous
    return math.inf if x > 1023 else 2.0**x


@dataclass(frozen=True)
class HighMassSet:
    elements: frozenset
    mass: float
    cardinality_bound: float
    alpha: float
    delta: float
    threshold: float

    def __len__(self):
        return len(self.elements)


def high_mass_set(mu, delta: float, alpha: float) -> HighMassSet:
    """Atoms with mass strictly above delta^(1/(1-alpha)) * 2^(-H_alpha(mu)).

    The set keeps mass >= mu(U) - delta and has at most
    delta^(-alpha/(1-alpha)) * 2^(H_alpha(mu)) elements.
    """
    mu = _as_measure(mu)
    total = mu.total
    if not 0 <= alpha < 1:
        raise ValidationError(f"alpha must lie in [0, 1), got {alpha}")
    if not 0 < delta < total:
        raise ValidationError(f"delta must lie in (0, mu(U)={total}), got {delta}")
    H = renyi_entropy(mu, alpha)
    log_d = math.log2(delta)
    thr = _exp2(log_d / (1 - alpha) - H)
    elems = frozenset(k for k, v in mu.items() if v > thr)
    mass = math.fsum(mu[k] for k in elems)
    bound = _exp2(-alpha * log_d / (1 - alpha) + H)
    return HighMassSet(elems, mass, bound, alpha, delta, thr)


def cardinality_lower_bound(mu, delta: float, delta_prime: float, alpha: float) -> float:
    """Minimum size of any set holding mass >= mu(U) - delta (alpha > 1)."""
    mu = _as_measure(mu)
    total = mu.total
    if alpha <= 1:
        raise ValidationError(f"alpha must exceed 1, got {alpha}")
    if delta <= 0 or delta_prime <= 0 or delta + delta_prime >= total:
        raise ValidationError("need delta, delta' > 0 with delta + delta' < mu(U)")
    H = renyi_entropy(mu, alpha)
    return _exp2(math.log2(delta_prime) / (alpha - 1) + math.log2(total - delta - delta_prime) + H)


def min_cardinality(mu, delta: float) -> int:
    """Smallest number of atoms whose mass reaches mu(U) - delta (largest atoms first)."""
    m = np.sort(_as_measure(mu).masses())[::-1]
    target = m.sum() - delta
    return int(np.searchsorted(np.cumsum(m), target, side="left") + 1) if target > 0 else 0


def iid_measure(mu1, n: int) -> Measure:
    """n-fold product of a measure, keyed by tuples of the factor's keys."""
    mu1 = _as_measure(mu1)
    keys = list(mu1.keys())
    masses = mu1.masses()
    table = masses
    for _ in range(n - 1):
        table = np.multiply.outer(table, masses)
    out = {}
    for idx, v in np.ndenumerate(np.asarray(table).reshape((len(keys),) * n)):
        out[tuple(keys[i] for i in idx)] = float(v)
    return Measure(out)


@dataclass(frozen=True)
class SourceCodingCurves:
    lower_alphas: tuple[float, ...]
    lower_curve: tuple[float, ...]
    upper_alphas: tuple[float, ...]
    upper_curve: tuple[float, ...]


def source_coding_bounds(mu_n, n: int, alphas: Iterable[float]) -> SourceCodingCurves:
    """Per-order normalized Renyi entropies (1/n) H_alpha(mu_n).

    Orders above 1 feed the lower bound on the optimum block coding rate,
    orders below 1 the upper bound; both sorted toward alpha = 1 last.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    alphas = sorted(set(float(a) for a in alphas))
    lo = [a for a in alphas if a > 1][::-1]
    hi = [a for a in alphas if a < 1]
    if 1.0 in alphas or not lo or not hi:
        raise ValidationError("alpha grid must straddle 1 and exclude it")
    mu_n = _as_measure(mu_n)
    return SourceCodingCurves(
        tuple(lo), tuple(renyi_entropy(mu_n, a) / n for a in lo),
        tuple(hi), tuple(renyi_entropy(mu_n, a) / n for a in hi),
    )


def extrapolate_to_one(alphas: Sequence[float], values: Sequence[float]) -> float:
    """Heuristic: linear fit through the two orders nearest 1, evaluated at 1."""
    pts = sorted(zip(alphas, values), key=lambda t: abs(t[0] - 1))[:2]
    if len(pts) < 2:
        return float(pts[0][1])
    (a0, v0), (a1, v1) = pts
    return float(v0 + (v1 - v0) * (1 - a0) / (a1 - a0))
