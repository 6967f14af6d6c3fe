"""Security indices of a key K against the public communication F."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ValidationError
from .pmf import SUM_TOL, kl_divergence

IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class KeyTranscriptPmf:
    """Joint pmf P_{K,F}; rows are key values 1..||K||, columns transcript values."""

    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        P = np.array(self.probs, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        if P.ndim != 2 or P.shape[0] < 1 or P.shape[1] < 1:
            raise ValidationError(f"key/transcript table must be 2-D, got shape {P.shape}")
        if not np.all(np.isfinite(P)) or np.any(P < 0):
            raise ValidationError("probabilities must be finite and nonnegative")
        if abs(P.sum() - 1) > SUM_TOL:
            raise ValidationError(f"probabilities sum to {float(P.sum()):.12g}, not 1")
        P.setflags(write=False)
        object.__setattr__(self, "probs", P)

    @property
    def n_keys(self) -> int:
        return self.probs.shape[0]

    @property
    def p_f(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    def conditional(self) -> tuple[np.ndarray, np.ndarray]:
        """P(k | i) for transcript values of positive probability; columns with P_F = 0 dropped."""
        pf = self.p_f
        keep = pf > 0
        return self.probs[:, keep] / pf[keep], pf[keep]


def _cond_entropy(kt: KeyTranscriptPmf) -> float:
    P = kt.probs
    pf = kt.p_f
    h = 0.0
    for i in np.flatnonzero(pf > 0):
        col = P[:, i]
        nz = col[col > 0]
        h -= float((nz * np.log2(nz / pf[i])).sum())
    return h


def s_in(kt: KeyTranscriptPmf) -> float:
    """log||K|| - H(K|F), cross-checked against D(P_KF || P_unif x P_F)."""
    direct = math.log2(kt.n_keys) - _cond_entropy(kt)
    ref = np.outer(np.full(kt.n_keys, 1 / kt.n_keys), kt.p_f)
    div = kl_divergence(kt.probs, ref)
    if abs(direct - div) > IDENTITY_TOL:
        raise ContractError(f"s_in forms disagree: {direct} vs {div}")
    return max(0.0, direct)


def s_var(kt: KeyTranscriptPmf) -> float:
    cond, pf = kt.conditional()
    return float((pf * np.abs(cond - 1 / kt.n_keys).sum(axis=0)).sum())


def strong_converse_gap(kt: KeyTranscriptPmf) -> tuple[float, float]:
    """(E|log(||K|| P(K|F))|, s_var log(||K||^2 / s_var)); the first never exceeds the second."""
    sv = s_var(kt)
    cond, pf = kt.conditional()
    joint = cond * pf
    mask = joint > 0
    lhs = float((joint[mask] * np.abs(np.log2(kt.n_keys * cond[mask]))).sum())
    if sv == 0:
        return (0.0, 0.0) if lhs < IDENTITY_TOL else (lhs, 0.0)
    rhs = sv * math.log2(kt.n_keys**2 / sv)
    return lhs, rhs
