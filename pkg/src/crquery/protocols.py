"""Monte Carlo simulation of one-round binning protocols and the querier's rank.

Sequences of length n over an alphabet of size a are indexed by the integer
sum_t x_t a^(n-1-t), so integer order is lexicographic order. A terminal
that talks announces the bin of its sequence under a keyed
multiply-xor-shift hash; bins = ceil(2^(n R)). Decoders are exact maximum a
posteriori searches over the announced bins, so at desk scale no typicality
decoder is involved.

Protocol kinds:

    sw2          terminal 1 bins X_1^n at rate H(X_1|X_2) + eta; L = X_1^n.
    omniscience  every terminal bins its sequence; L = X_M^n, recovered by A.
    none         nobody talks; L = X_1^n, guessed by the other terminals.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import simplex
from .errors import InsufficientSuccessError, ResourceError, ValidationError
from .fractional import enumerate_family
from .pmf import JointPmf, as_subset, conditional_entropy, marginal_table

SEARCH_LIMIT = 2**26
CHUNK = 2**16
KINDS = ("sw2", "omniscience", "none")

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def bin_hash(idx: np.ndarray, key: int, n_bins: int) -> np.ndarray:
    """Keyed splitmix64 finalizer reduced mod n_bins. Stable across versions."""
    z = np.asarray(idx, dtype=np.uint64) ^ np.uint64(key)
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z % np.uint64(n_bins)).astype(np.int64)


def terminal_key(seed: int, terminal: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(terminal,)).generate_state(1, np.uint64)[0])


def _as_seedseq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def sample_source(p: JointPmf, n: int, seed) -> np.ndarray:
    """n i.i.d. draws of X_M as an (n, m) integer array; deterministic in seed."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(_as_seedseq(seed))
    flat = rng.choice(p.probs.size, size=n, p=p.probs)
    return np.stack(np.unravel_index(flat, p.alphabet_sizes), axis=1).astype(np.int64)


@dataclass(frozen=True)
class Protocol:
    kind: str
    rates: tuple[float, ...]
    eta: float = 0.0
    seed: int = 0
    A: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"protocol kind must be one of {KINDS}, got {self.kind!r}")
        if any(r < 0 for r in self.rates):
            raise ValidationError("rates must be nonnegative")
        if self.kind == "sw2" and len(self.rates) != 2:
            raise ValidationError("sw2 protocol is defined for exactly 2 terminals")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))

    @property
    def m(self) -> int:
        return len(self.rates)

    def target(self) -> tuple[int, ...]:
        return self.A if self.A is not None else tuple(range(1, self.m + 1))

    @classmethod
    def slepian_wolf(cls, p: JointPmf, eta: float, seed: int = 0) -> "Protocol":
        if p.m != 2:
            raise ValidationError("sw2 protocol is defined for exactly 2 terminals")
        return cls("sw2", (conditional_entropy(p, [1], [2]) + eta, 0.0), eta, seed)

    @classmethod
    def silent(cls, m: int, seed: int = 0) -> "Protocol":
        return cls("none", (0.0,) * m, 0.0, seed)

    @classmethod
    def omniscience(cls, p: JointPmf, eta: float, seed: int = 0, A: Iterable[int] | None = None,
                    split: str = "uniform") -> "Protocol":
        """Rates on the omniscience sum-rate boundary plus eta each.

        split="uniform" divides the minimum sum rate evenly; split="vertex"
        takes a vertex of the rate region (always achievable, unlike the
        uniform split for asymmetric sources).
        """
        A = as_subset(A if A is not None else range(1, p.m + 1), p.m)
        base = omniscience_rates(p, A, split)
        return cls("omniscience", tuple(r + eta for r in base), eta, seed, A)


def omniscience_rates(p: JointPmf, A: Sequence[int], split: str = "uniform") -> tuple[float, ...]:
    """A point of min sum rate in {R : R(B) >= H(X_B | X_B^c), B admissible for A}."""
    fam = enumerate_family(p.m, A)
    m, nb = p.m, len(fam)
    h = np.array([conditional_entropy(p, B, fam.complement(B)) for B in fam.members])
    # variables: R_1..R_m, then one surplus per constraint
    A_eq = np.hstack([fam.incidence().T, -np.eye(nb)])
    c = np.concatenate([np.ones(m), np.zeros(nb)])
    res = simplex.solve(c, A_eq, h)
    vertex = res.x[:m]
    if split == "vertex":
        return tuple(float(v) for v in vertex)
    if split == "uniform":
        return (float(vertex.sum()) / m,) * m
    raise ValidationError(f"unknown rate split {split!r}")


@dataclass
class Transcript:
    F: tuple
    L: object
    estimates: dict
    success: bool
    x: np.ndarray = field(repr=False)


class _Terminal:
    def __init__(self, size: int, n: int, rate: float, key: int):
        self.size = size
        self.n = n
        self.count = size**n
        self.powers = size ** np.arange(n - 1, -1, -1, dtype=np.int64)
        self.talks = rate > 0
        self.n_bins = int(math.ceil(2.0 ** (n * rate))) if self.talks else 1
        self._key = key
        self._order = None
        self._starts = None

    def index(self, seq: np.ndarray) -> int:
        return int(np.dot(seq, self.powers))

    def digits(self, idx: np.ndarray) -> np.ndarray:
        return (np.asarray(idx, dtype=np.int64)[:, None] // self.powers) % self.size

    def bin_of(self, idx: int) -> int | None:
        if not self.talks:
            return None
        return int(bin_hash(np.array([idx]), self._key, self.n_bins)[0])

    def _table(self):
        if self._order is None:
            if self.count > SEARCH_LIMIT:
                raise ResourceError(f"{self.count} sequences per terminal exceed 2^26; shrink n")
            labels = np.empty(self.count, dtype=np.int64)
            for lo in range(0, self.count, CHUNK * 16):
                hi = min(self.count, lo + CHUNK * 16)
                labels[lo:hi] = bin_hash(np.arange(lo, hi), self._key, self.n_bins)
            self._order = np.argsort(labels, kind="stable")
            self._starts = np.searchsorted(labels[self._order], np.arange(self.n_bins + 1))
        return self._order, self._starts

    def candidates(self, b: int | None) -> np.ndarray:
        """Ascending sequence indices consistent with announced bin b (all if silent)."""
        if b is None:
            if self.count > SEARCH_LIMIT:
                raise ResourceError(f"{self.count} candidate sequences exceed 2^26; shrink n")
            return np.arange(self.count, dtype=np.int64)
        order, starts = self._table()
        return order[starts[b]:starts[b + 1]]


class _LogProb:
    """Sequence log-probabilities computed so that equal-probability atoms give bit-equal sums."""

    def __init__(self, table: np.ndarray):
        flat = table.reshape(-1)
        key = np.round(flat, 15)
        values, cls = np.unique(key, return_inverse=True)
        self.shape = table.shape
        self.cls = cls.reshape(-1)
        with np.errstate(divide="ignore"):
            self.logs = np.log2(values)
        self.n_cls = len(values)

    def __call__(self, atoms: np.ndarray) -> np.ndarray:
        """atoms: (C, n) flat joint-atom indices -> (C,) log2 probabilities."""
        c = self.cls[atoms]
        counts = np.stack([(c == k).sum(axis=1) for k in range(self.n_cls)], axis=1)
        with np.errstate(invalid="ignore"):
            terms = np.where(counts > 0, counts * self.logs[None, :], 0.0)
        return terms.sum(axis=1)


def _product_rows(cands: Sequence[np.ndarray]):
    """Yield chunks of the Cartesian product as a list of index columns (lexicographic)."""
    sizes = [len(c) for c in cands]
    total = math.prod(sizes)
    if total > SEARCH_LIMIT:
        raise ResourceError(f"decoder search of {total} candidates exceeds 2^26; shrink n")
    for lo in range(0, total, CHUNK):
        flat = np.arange(lo, min(total, lo + CHUNK))
        pos = np.unravel_index(flat, sizes) if sizes else ()
        yield [c[p] for c, p in zip(cands, pos)]


class BinningScheme:
    """A protocol compiled for a source and block length."""

    def __init__(self, p: JointPmf, proto: Protocol, n: int):
        if proto.m != p.m:
            raise ValidationError(f"protocol for {proto.m} terminals, source has {p.m}")
        if n < 1:
            raise ValidationError("n must be >= 1")
        self.p, self.proto, self.n = p, proto, n
        self.A = as_subset(proto.target(), p.m)
        self.terms = [
            _Terminal(a, n, r, terminal_key(proto.seed, i))
            for i, (a, r) in enumerate(zip(p.alphabet_sizes, proto.rates), start=1)
        ]
        self.joint_lp = _LogProb(p.table)
        self._pair_lp = {}
        if proto.kind == "omniscience":
            self.unknown = tuple(range(1, p.m + 1))
        else:
            self.unknown = (1,)
        self.first_lp = _LogProb(marginal_table(p, [1]))

    @property
    def bins(self) -> tuple[int | None, ...]:
        return tuple(t.n_bins if t.talks else None for t in self.terms)

    def seq_indices(self, x: np.ndarray) -> tuple[int, ...]:
        return tuple(t.index(x[:, i]) for i, t in enumerate(self.terms))

    def encode(self, x: np.ndarray) -> tuple:
        return tuple(t.bin_of(idx) for t, idx in zip(self.terms, self.seq_indices(x)))

    def cr_value(self, x: np.ndarray):
        idx = self.seq_indices(x)
        return idx if self.proto.kind == "omniscience" else idx[0]

    def _atoms(self, cols: dict[int, np.ndarray], shape) -> np.ndarray:
        """cols: terminal -> (C, n) digits; returns flat atom index into `shape` over those terminals."""
        atoms = np.zeros(next(iter(cols.values())).shape, dtype=np.int64)
        for (i, d), size in zip(sorted(cols.items()), shape):
            atoms = atoms * size + d
        return atoms

    def _pair(self, j: int) -> _LogProb:
        if j not in self._pair_lp:
            self._pair_lp[j] = _LogProb(marginal_table(self.p, [1, j]))
        return self._pair_lp[j]

    def estimate(self, j: int, x_j: np.ndarray, F: tuple):
        """Terminal j's MAP estimate of L from its own sequence and the transcript only."""
        own = self.terms[j - 1].index(np.asarray(x_j))
        if self.proto.kind != "omniscience":
            if j == 1:
                return own
            cands = self.terms[0].candidates(F[0])
            lp = self._pair(j)
            own_digits = np.asarray(x_j, dtype=np.int64)[None, :]
            best, best_val = None, -math.inf
            for lo in range(0, len(cands), CHUNK):
                chunk = cands[lo:lo + CHUNK]
                d1 = self.terms[0].digits(chunk)
                atoms = d1 * self.p.alphabet_sizes[j - 1] + own_digits
                s = lp(atoms)
                k = int(np.argmax(s))
                if s[k] > best_val:
                    best, best_val = int(chunk[k]), s[k]
            return best if best is not None else int(cands[0]) if len(cands) else None
        others = [i for i in range(1, self.p.m + 1) if i != j]
        cands = [self.terms[i - 1].candidates(F[i - 1]) for i in others]
        own_digits = np.asarray(x_j, dtype=np.int64)[None, :]
        best, best_val = None, -math.inf
        for cols in _product_rows(cands):
            digits = {i: self.terms[i - 1].digits(c) for i, c in zip(others, cols)}
            digits[j] = np.broadcast_to(own_digits, (len(cols[0]) if cols else 1, self.n))
            s = self.joint_lp(self._atoms(digits, self.p.alphabet_sizes))
            k = int(np.argmax(s))
            if s[k] > best_val:
                best_val = s[k]
                vals = {i: int(c[k]) for i, c in zip(others, cols)}
                vals[j] = own
                best = tuple(vals[i] for i in range(1, self.p.m + 1))
        return best

    def run(self, x: np.ndarray) -> Transcript:
        F = self.encode(x)
        L = self.cr_value(x)
        est = {j: self.estimate(j, x[:, j - 1], F) for j in self.A}
        return Transcript(F, L, est, all(v == L for v in est.values()), x)

    def rank(self, L, F: tuple) -> int:
        """Rank of L under the posterior-descending strategy for L given F."""
        if self.proto.kind != "omniscience":
            cands = self.terms[0].candidates(F[0])
            lp_true = self.first_lp(self.terms[0].digits(np.array([L])))[0]
            better = 0
            for lo in range(0, len(cands), CHUNK):
                chunk = cands[lo:lo + CHUNK]
                s = self.first_lp(self.terms[0].digits(chunk))
                better += int(np.count_nonzero(s > lp_true))
                better += int(np.count_nonzero((s == lp_true) & (chunk < L)))
            return better + 1
        cands = [t.candidates(b) for t, b in zip(self.terms, F)]
        m = self.p.m
        true_digits = {i + 1: self.terms[i].digits(np.array([L[i]])) for i in range(m)}
        lp_true = self.joint_lp(self._atoms(true_digits, self.p.alphabet_sizes))[0]
        better = 0
        for cols in _product_rows(cands):
            digits = {i + 1: self.terms[i].digits(c) for i, c in enumerate(cols)}
            s = self.joint_lp(self._atoms(digits, self.p.alphabet_sizes))
            # lexicographic comparison of the candidate tuple against L
            less = np.zeros(len(s), dtype=bool)
            eq = np.ones(len(s), dtype=bool)
            for i, c in enumerate(cols):
                less |= eq & (c < L[i])
                eq &= c == L[i]
            better += int(np.count_nonzero(s > lp_true))
            better += int(np.count_nonzero((s == lp_true) & less))
        return better + 1

    def posterior(self, F: tuple) -> dict:
        """Explicit posterior of L given F (small cases only; used as a cross-check)."""
        if self.proto.kind != "omniscience":
            cands = self.terms[0].candidates(F[0])
            w = np.exp2(self.first_lp(self.terms[0].digits(cands)))
            return {int(c): float(v) for c, v in zip(cands, w / w.sum())}
        cands = [t.candidates(b) for t, b in zip(self.terms, F)]
        out = {}
        for cols in _product_rows(cands):
            digits = {i + 1: self.terms[i].digits(c) for i, c in enumerate(cols)}
            w = np.exp2(self.joint_lp(self._atoms(digits, self.p.alphabet_sizes)))
            for k in range(len(w)):
                out[tuple(int(c[k]) for c in cols)] = float(w[k])
        total = math.fsum(out.values())
        return {k: v / total for k, v in out.items()}


def run_protocol(p: JointPmf, proto: Protocol, n: int, seed) -> Transcript:
    return BinningScheme(p, proto, n).run(sample_source(p, n, seed))


@dataclass
class TrialRecord:
    trial: int
    success: bool
    rank: int
    log_rank_per_symbol: float


@dataclass
class SimulationResult:
    n: int
    trials: int
    success_rate: float
    exponent_quantile: float
    quantile: float
    rate_used: tuple[float, ...]
    bins: tuple[int | None, ...]
    records: list[TrialRecord]

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "success", "rank", "log_rank_per_symbol"])
            for r in self.records:
                w.writerow([r.trial, int(r.success), r.rank, f"{r.log_rank_per_symbol:.12g}"])


def trial_seed(seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(int(trial),))


def default_threads() -> int:
    env = os.environ.get("CRQUERY_THREADS")
    return max(1, int(env)) if env else 1


def simulate(p: JointPmf, proto: Protocol, n: int, trials: int, quantile: float, seed: int,
             include_failures: bool = False, threads: int | None = None) -> SimulationResult:
    """Run independent trials; trial t draws from the stream (seed, t).

    The exponent is the given quantile of log2(rank)/n over successful trials
    (all trials with include_failures). Results do not depend on `threads`.
    """
    if trials < 100:
        raise ValidationError("need at least 100 trials")
    if not 0 < quantile < 1:
        raise ValidationError("quantile must lie in (0, 1)")
    scheme = BinningScheme(p, proto, n)
    for t in scheme.terms:
        if t.talks:
            t._table()  # build shared tables before threads start

    def one(t: int) -> TrialRecord:
        tr = scheme.run(sample_source(p, n, trial_seed(seed, t)))
        rank = scheme.rank(tr.L, tr.F)
        return TrialRecord(t, tr.success, rank, math.log2(rank) / n)

    workers = threads if threads is not None else default_threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(one, range(trials)))
    else:
        records = [one(t) for t in range(trials)]

    ok = [r for r in records if r.success or include_failures]
    if not ok:
        raise InsufficientSuccessError("every trial failed to recover the common randomness")
    values = np.sort([r.log_rank_per_symbol for r in ok])
    return SimulationResult(
        n=n,
        trials=trials,
        success_rate=sum(r.success for r in records) / trials,
        exponent_quantile=float(np.quantile(values, quantile)),
        quantile=quantile,
        rate_used=proto.rates,
        bins=scheme.bins,
        records=records,
    )


def empirical_exponent(p: JointPmf, proto: Protocol, n: int, trials: int, quantile: float, seed: int,
                       include_failures: bool = False, threads: int | None = None) -> float:
    return simulate(p, proto, n, trials, quantile, seed, include_failures, threads).exponent_quantile
