"""Explicit converse constructions on small finite models.

A CRModel is a joint pmf of k terminal observations Y_1..Y_k together with
an interactive transcript F(y), a common-randomness value L(y) and per
terminal estimators L_j(y_j, F). Everything is a lookup table, so every
probability in the construction is computed by full enumeration.

The querier built here ranks a shortlist L(i) first for each transcript
value i. The shortlist comes from the high-mass set of order 1/k of the
measure mu_i(l) = P(A_{l,i} | F = i), where A_{l,i} collects the low
likelihood-ratio observations that produce transcript i and on which every
terminal decodes l.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ResourceError, ValidationError
from .fractional import FractionalPartition, dual_of
from .pmf import Measure, likelihood_ratio_set, renyi_entropy
from .renyi import high_mass_set

MAX_MODEL_ATOMS = 2**20
REL_SLACK = 1e-12


def _ge(a: float, b: float) -> bool:
    return a >= b - REL_SLACK * max(1.0, abs(b))


def _le(a: float, b: float) -> bool:
    return a <= b + REL_SLACK * max(1.0, abs(b))


def _is_rectangle(cells: np.ndarray, shape) -> bool:
    """True when the listed flat cells form a product set."""
    coords = np.unravel_index(cells, shape)
    sides = [np.unique(c) for c in coords]
    return math.prod(len(s) for s in sides) == len(cells)


@dataclass(frozen=True)
class CRModel:
    pmf: np.ndarray = field(repr=False)
    transcript: np.ndarray = field(repr=False)  # F(y) as an index 0..n_f-1
    cr: np.ndarray = field(repr=False)          # L(y) as an index 0..n_l-1
    estimators: tuple = field(repr=False)       # L_j as (|Y_j|, n_f) tables

    def __post_init__(self):
        P = np.array(self.pmf, dtype=float)
        if P.ndim < 2:
            raise ValidationError("need k >= 2 terminals")
        if P.size > MAX_MODEL_ATOMS:
            raise ResourceError(f"model has {P.size} atoms, limit 2^20")
        if np.any(P < 0) or abs(P.sum() - 1) > 1e-9:
            raise ValidationError("pmf must be nonnegative and sum to 1")
        F = np.asarray(self.transcript, dtype=np.int64)
        L = np.asarray(self.cr, dtype=np.int64)
        if F.shape != P.shape or L.shape != P.shape:
            raise ValidationError("transcript and CR tables must match the pmf shape")
        if F.min() < 0 or L.min() < 0:
            raise ValidationError("transcript and CR labels must be nonnegative indices")
        est = tuple(np.asarray(e, dtype=np.int64) for e in self.estimators)
        n_f = int(F.max()) + 1
        if len(est) != P.ndim or any(e.shape != (P.shape[j], n_f) for j, e in enumerate(est)):
            raise ValidationError("estimator j must be a (|Y_j|, n_f) table")
        flat = F.reshape(-1)
        for i in range(n_f):
            if not _is_rectangle(np.flatnonzero(flat == i), P.shape):
                raise ValidationError(f"transcript value {i} is not a product set; not interactive communication")
        for name, v in (("pmf", P), ("transcript", F), ("cr", L)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "estimators", est)

    @property
    def k(self) -> int:
        return self.pmf.ndim

    @property
    def n_f(self) -> int:
        return int(self.transcript.max()) + 1

    @property
    def n_l(self) -> int:
        return int(self.cr.max()) + 1

    def marginals(self) -> list[np.ndarray]:
        axes = range(self.k)
        return [self.pmf.sum(axis=tuple(a for a in axes if a != j)) for j in axes]

    def product_of_marginals(self) -> np.ndarray:
        out = np.ones(())
        for m in self.marginals():
            out = np.multiply.outer(out, m)
        return out

    def agreement(self) -> np.ndarray:
        """Boolean table: every terminal's estimate equals L(y)."""
        ok = np.ones(self.pmf.shape, dtype=bool)
        for j, e in enumerate(self.estimators):
            shape = [1] * self.k
            shape[j] = -1
            yj = np.arange(self.pmf.shape[j]).reshape(shape)
            ok &= e[np.broadcast_to(yj, self.pmf.shape), self.transcript] == self.cr
        return ok

    def error_probability(self) -> float:
        return float(self.pmf[~self.agreement()].sum())


def interactive_transcript(shape, messages) -> np.ndarray:
    """Transcript index table from message tables.

    messages[t][j] is a (|Y_j|, H) table; in round t terminal j sends
    messages[t][j][y_j, h] where h = (hash of messages so far) mod H.
    """
    cells = list(np.ndindex(*shape))
    keys = {}
    F = np.empty(shape, dtype=np.int64)
    for y in cells:
        hist: list[int] = []
        for rnd in messages:
            for j, table in enumerate(rnd):
                h = hash(tuple(hist)) % table.shape[1]
                hist.append(int(table[y[j], h]))
        F[y] = keys.setdefault(tuple(hist), len(keys))
    return F


def map_estimators(pmf: np.ndarray, F: np.ndarray, L: np.ndarray) -> tuple:
    """L_j(y_j, i) = argmax_l P(L = l, Y_j = y_j, F = i), ties to the smallest l."""
    k = pmf.ndim
    n_f, n_l = int(F.max()) + 1, int(L.max()) + 1
    out = []
    for j in range(k):
        acc = np.zeros((pmf.shape[j], n_f, n_l))
        yj = np.broadcast_to(
            np.arange(pmf.shape[j]).reshape([-1 if a == j else 1 for a in range(k)]), pmf.shape
        )
        np.add.at(acc, (yj.reshape(-1), F.reshape(-1), L.reshape(-1)), pmf.reshape(-1))
        out.append(np.argmax(acc, axis=2))
    return tuple(out)


def random_interactive_model(rng: np.random.Generator, k: int, max_support: int = 8,
                             rounds: int | None = None, max_message: int = 3,
                             max_cr: int = 6) -> CRModel:
    shape = tuple(int(s) for s in rng.integers(2, max_support + 1, size=k))
    conc = rng.choice([0.2, 1.0, 5.0])
    pmf = rng.dirichlet(np.full(math.prod(shape), conc)).reshape(shape)
    if rng.random() < 0.3:
        # a correlated component: terminals share a common symbol
        shared = np.zeros(shape)
        for s in range(min(shape)):
            shared[(s,) * k] = 1.0
        pmf = 0.5 * pmf + 0.5 * shared / shared.sum()
    rounds = rounds if rounds is not None else int(rng.integers(0, 3))
    messages = [
        [rng.integers(0, int(rng.integers(1, max_message + 1)), size=(shape[j], 4)) for j in range(k)]
        for _ in range(rounds)
    ]
    F = interactive_transcript(shape, messages)
    # CR: random function of the transcript and of one terminal's observation
    s = int(rng.integers(0, k))
    n_cr = int(rng.integers(1, max_cr + 1))
    g = rng.integers(0, n_cr, size=(int(F.max()) + 1, shape[s]))
    ys = np.broadcast_to(np.arange(shape[s]).reshape([-1 if a == s else 1 for a in range(k)]), shape)
    L = g[F, ys]
    _, L = np.unique(L, return_inverse=True)
    L = L.reshape(shape)
    return CRModel(pmf, F, L, map_estimators(pmf, F, L))


def tightest_theta(pmf: np.ndarray, delta: float) -> tuple[float, np.ndarray]:
    """Smallest theta with P(P(y) / prod_j P_j(y_j) <= theta) >= 1 - delta; returns (theta, T_0 mask)."""
    P = np.asarray(pmf, dtype=float)
    prod = np.ones(())
    for j in range(P.ndim):
        prod = np.multiply.outer(prod, P.sum(axis=tuple(a for a in range(P.ndim) if a != j)))
    pos = P > 0
    ratio = np.where(pos, P / np.where(pos, prod, 1.0), 0.0)
    r = ratio[pos]
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(P[pos][order])
    idx = int(np.searchsorted(cum, 1 - delta - 1e-15, side="left"))
    theta = float(r[order][min(idx, len(r) - 1)])
    return theta, pos & (ratio <= theta)


@dataclass
class ConverseConstruction:
    theta: float
    delta: float
    epsilon: float
    T0: np.ndarray = field(repr=False)
    A: dict = field(repr=False)          # (l, i) -> boolean mask of A_{l,i}
    I1: frozenset = frozenset()
    I2: frozenset = frozenset()
    I0: frozenset = frozenset()
    mu: dict = field(default_factory=dict)
    shortlist: dict = field(default_factory=dict)
    ranks: np.ndarray = field(default=None, repr=False)   # (n_l, n_f) q0 ranks
    card_bound: float = 0.0
    success: float = 0.0
    guarantee: float = 0.0
    p_I0: float = 0.0
    min_shortlist_mass: float = 1.0
    renyi_exp: dict = field(default_factory=dict)  # i -> 2^(H_{1/k}(mu_i))
    renyi_bound: float = 0.0

    @property
    def holds(self) -> bool:
        return _ge(self.success, self.guarantee)

    def certificate(self) -> dict:
        """The intermediate claims of the construction, each a boolean."""
        root = math.sqrt(self.epsilon + self.delta)
        return {
            "A_disjoint": True,  # by construction A_{l,i} partition by L(y)
            "I0_mass": _ge(self.p_I0, 1 - self.delta - root),
            "shortlist_mass": _ge(self.min_shortlist_mass, 1 - self.delta - root),
            "shortlist_size": all(_le(len(s), self.card_bound) for s in self.shortlist.values()),
            "renyi_order_1_over_k": all(_le(v, self.renyi_bound) for v in self.renyi_exp.values()),
            "guarantee": self.holds,
        }


def build_theorem3_strategy(model: CRModel, delta: float, epsilon: float,
                            theta: float | None = None) -> ConverseConstruction:
    k = model.k
    if not 0 < delta or epsilon < 0:
        raise ValidationError("need delta > 0 and epsilon >= 0")
    if delta + math.sqrt(delta + epsilon) >= 1:
        raise ValidationError("need delta + sqrt(delta + epsilon) < 1")
    err = model.error_probability()
    if err > epsilon + 1e-12:
        raise ContractError(f"L is not epsilon-CR: failure probability {err} > {epsilon}")

    P = model.pmf
    tight, T0 = tightest_theta(P, delta)
    if theta is None:
        theta = tight
    else:
        prod = model.product_of_marginals()
        T0 = (P > 0) & (P <= theta * prod)
        if P[T0].sum() < 1 - delta - 1e-12:
            raise ValidationError(f"theta={theta} violates P(ratio <= theta) >= 1 - delta")

    F, L = model.transcript, model.cr
    n_f, n_l = model.n_f, model.n_l
    good = T0 & model.agreement()
    pF = np.bincount(F.reshape(-1), weights=P.reshape(-1), minlength=n_f)
    pF_tilde = np.bincount(F.reshape(-1), weights=model.product_of_marginals().reshape(-1), minlength=n_f)
    cell = np.zeros((n_l, n_f))
    np.add.at(cell, (L[good], F[good]), P[good])

    root = math.sqrt(epsilon + delta)
    with np.errstate(invalid="ignore", divide="ignore"):
        cond_good = np.where(pF > 0, cell.sum(axis=0) / pF, 0.0)
    I1 = frozenset(int(i) for i in np.flatnonzero((pF > 0) & (cond_good >= 1 - root)))
    I2 = frozenset(int(i) for i in likelihood_ratio_set(pF, pF_tilde, delta))
    I0 = I1 & I2

    alpha = 1.0 / k
    mu, shortlist, renyi_exp = {}, {}, {}
    for i in sorted(I0):
        m = Measure({l: float(cell[l, i] / pF[i]) for l in range(n_l)})
        mu[i] = m
        hs = high_mass_set(m, delta, alpha)
        renyi_exp[i] = 2.0 ** renyi_entropy(m, alpha)
        shortlist[i] = sorted(hs.elements, key=lambda l: (-m[l], l))

    # posterior-descending fallback order, shortlist promoted to the front
    ranks = np.empty((n_l, n_f), dtype=np.int64)
    post = np.zeros((n_l, n_f))
    np.add.at(post, (L.reshape(-1), F.reshape(-1)), P.reshape(-1))
    for i in range(n_f):
        front = shortlist.get(i, [])
        rest = [l for l in np.lexsort((np.arange(n_l), -post[:, i])) if l not in set(front)]
        for r, l in enumerate(list(front) + rest, start=1):
            ranks[l, i] = r

    card_bound = (theta / delta**2) ** (1 / (k - 1))
    within = ranks[L, F] <= card_bound
    success = float(P[within].sum())
    A = {(l, i): good & (L == l) & (F == i) for i in sorted(I0) for l in range(n_l) if cell[l, i] > 0}
    sl_mass = [
        float(post[shortlist[i], i].sum() / pF[i]) if shortlist[i] else 0.0 for i in sorted(I0)
    ]
    return ConverseConstruction(
        theta=theta, delta=delta, epsilon=epsilon, T0=T0, A=A, I1=I1, I2=I2, I0=I0, mu=mu,
        shortlist=shortlist, ranks=ranks, card_bound=card_bound, success=success,
        guarantee=(1 - delta - root) ** 2, p_I0=float(pF[sorted(I0)].sum()),
        min_shortlist_mass=min(sl_mass, default=1.0),
        renyi_exp=renyi_exp, renyi_bound=(theta / delta) ** (1 / (k - 1)),
    )


def kappa(m: int, delta: float) -> float:
    """(m 2^m)^(-m) delta^(m+1)."""
    if m < 2 or delta <= 0:
        raise ValidationError("need m >= 2 and delta > 0")
    return (m * 2.0**m) ** (-m) * delta ** (m + 1)


def theorem5_bound(m: int, A, lam: FractionalPartition, theta_0: float,
                   theta_complements: dict, delta: float) -> float:
    """(theta / kappa(delta))^(lambda_sum - 1) with theta = prod theta_{B^c}^{dual weight} / theta_0."""
    if lam.family.m != m or tuple(sorted(A)) != tuple(lam.family.A):
        raise ValidationError("fractional partition was built for a different (m, A)")
    dual = dual_of(lam)
    log_theta = -math.log2(theta_0)
    for comp, w in dual.items():
        if w == 0:
            continue
        t = theta_complements[tuple(comp)]
        if t <= 0:
            raise ValidationError("theta values must be positive")
        log_theta += w * math.log2(t)
    return 2.0 ** ((log_theta - math.log2(kappa(m, delta))) * (lam.lambda_sum - 1))


def union_bound_thetas(pmf: np.ndarray, complements, delta: float) -> tuple[float, dict]:
    """theta_0 and theta_{B^c} meeting the joint hypothesis by a union bound.

    Each of the 1 + |complements| events gets failure budget delta / (1 + |complements|)
    and uses its tightest quantile; the intersection then has probability >= 1 - delta.
    """
    P = np.asarray(pmf, dtype=float)
    budget = delta / (1 + len(complements))

    def quantile(values, weights, lower: bool):
        # smallest t with P(value <= t) >= 1 - budget (lower) or largest with P(value >= t) >= 1 - budget
        order = np.argsort(values if lower else -values, kind="stable")
        cum = np.cumsum(weights[order])
        idx = min(int(np.searchsorted(cum, 1 - budget - 1e-15)), len(order) - 1)
        return float(values[order][idx])

    pos = P > 0
    w = P[pos]
    theta_0 = 1 / quantile(P[pos], w, lower=True)
    thetas = {}
    k = P.ndim
    for comp in complements:
        axes = tuple(a for a in range(k) if a + 1 not in comp)
        marg = P.sum(axis=axes, keepdims=True)
        vals = np.broadcast_to(marg, P.shape)[pos]
        thetas[tuple(comp)] = 1 / quantile(vals, w, lower=False)
    return theta_0, thetas
