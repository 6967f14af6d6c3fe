"""Seeded property suites with exhaustive oracles.

Each suite draws random instances from a seeded generator, evaluates every
property by full enumeration, and reports instances, violations and the
first counterexample. Reports are plain dicts so they serialize directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .converse import build_theorem3_strategy, random_interactive_model
from .errors import ContractError, ValidationError
from .fractional import query_exponent, query_exponent_alt
from .partitions import divergence_exponent
from .pmf import JointPmf, Measure
from .queries import rank_tail_to_posterior, posterior_to_rank_tail
from .renyi import cardinality_lower_bound, high_mass_set
from .secrecy import KeyTranscriptPmf, s_in, s_var, strong_converse_gap

SUITES = ("lemma2", "lemma3", "theorem1-equiv", "theorem3", "secrecy")
REL_SLACK = 1e-12


def _le(a, b):
    return a <= b + REL_SLACK * max(1.0, abs(b))


@dataclass
class PropertyResult:
    name: str
    instances: int = 0
    violations: int = 0
    counterexample: dict | None = None
    active: int | None = None  # instances where an implication's hypothesis held

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.instances > 0

    def record(self, ok: bool, dump: Callable[[], dict]):
        self.instances += 1
        if not ok:
            self.violations += 1
            if self.counterexample is None:
                self.counterexample = dump()

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "instances": self.instances,
            "violations": self.violations,
            "active": self.active,
            "counterexample": self.counterexample,
        }


@dataclass
class SuiteReport:
    suite: str
    seed: int
    properties: list[PropertyResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "pass": self.passed,
            "properties": [p.as_dict() for p in self.properties],
        }


def _rng(seed: int, suite: str) -> np.random.Generator:
    return np.random.default_rng([seed, SUITES.index(suite)])


def random_joint(rng: np.random.Generator, shape) -> np.ndarray:
    """Dirichlet draw with a random concentration; sparse and peaked tables included."""
    conc = float(rng.choice([0.1, 0.5, 1.0, 4.0]))
    P = rng.dirichlet(np.full(int(np.prod(shape)), conc))
    if rng.random() < 0.2:
        P[rng.random(P.size) < 0.3] = 0.0
        if P.sum() == 0:
            P[0] = 1.0
        P /= P.sum()
    return P.reshape(shape)


def random_pmf(rng: np.random.Generator, m: int, max_alphabet: int = 3) -> JointPmf:
    sizes = tuple(int(s) for s in rng.integers(2, max_alphabet + 1, size=m))
    return JointPmf.from_table(random_joint(rng, sizes))


def random_measure(rng: np.random.Generator, max_atoms: int) -> Measure:
    n = int(rng.integers(1, max_atoms + 1))
    scale = float(rng.choice([0.5, 1.0, 3.0]))
    w = rng.dirichlet(np.full(n, float(rng.choice([0.2, 1.0, 5.0])))) * scale
    return Measure({i: float(v) for i, v in enumerate(w)})


def subset_masses(masses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mass and size of every subset of the atoms, indexed by bitmask."""
    sums = np.zeros(1)
    sizes = np.zeros(1, dtype=np.int64)
    for v in masses:
        sums = np.concatenate([sums, sums + v])
        sizes = np.concatenate([sizes, sizes + 1])
    return sums, sizes


def lemma2_suite(seed: int, instances: int = 500, max_side: int = 64) -> SuiteReport:
    rng = _rng(seed, "lemma2")
    fwd, conv = PropertyResult("posterior_to_rank_tail", active=0), PropertyResult("rank_tail_to_posterior", active=0)
    for _ in range(instances):
        nu, nv = (int(x) for x in rng.integers(1, max_side + 1, size=2))
        joint = random_joint(rng, (nu, nv))
        if rng.random() < 0.3:
            # U uniform and independent of V: the forward hypothesis is met for small gamma
            joint = np.outer(np.full(nu, 1 / nu), joint.sum(axis=0))
        delta = float(rng.uniform(0.01, 0.49))
        gamma = float(2.0 ** rng.uniform(0, math.log2(max(nu, 2)) + 1))
        f = posterior_to_rank_tail(joint, gamma, delta)
        c = rank_tail_to_posterior(joint, gamma, delta)
        dump = lambda: {"joint": joint.tolist(), "gamma": gamma, "delta": delta}
        fwd.record(f.holds, dump)
        conv.record(c.holds, dump)
        fwd.active += f.hypothesis
        conv.active += c.hypothesis
    return SuiteReport("lemma2", seed, [fwd, conv])


def lemma3_suite(seed: int, instances: int = 1000, max_atoms: int = 64,
                 exhaustive_atoms: int = 16) -> SuiteReport:
    rng = _rng(seed, "lemma3")
    mass_ok, card_ok = PropertyResult("high_mass_set_mass"), PropertyResult("high_mass_set_cardinality")
    lower = PropertyResult("cardinality_lower_bound_all_sets")
    for _ in range(instances):
        mu = random_measure(rng, max_atoms)
        total = mu.total
        delta = float(rng.uniform(0.001, 0.999)) * total
        alpha = float(rng.choice([0.0, rng.uniform(0, 1)]))
        hs = high_mass_set(mu, delta, alpha)
        dump = lambda: {"weights": mu.weights, "delta": delta, "alpha": alpha}
        mass_ok.record(hs.mass >= total - delta - REL_SLACK * total, dump)
        card_ok.record(_le(len(hs), hs.cardinality_bound), dump)

        mu2 = random_measure(rng, exhaustive_atoms)
        t2 = mu2.total
        d, dp = (float(x) * t2 for x in rng.dirichlet([1, 1, 1])[:2])
        a2 = float(1 + rng.exponential(1.0))
        bound = cardinality_lower_bound(mu2, d, dp, a2)
        sums, sizes = subset_masses(mu2.masses())
        qualifying = sums >= t2 - d
        worst = int(sizes[qualifying].min())
        lower.record(
            bool(np.all(sizes[qualifying] >= bound - REL_SLACK * max(1.0, bound))),
            lambda: {"weights": mu2.weights, "delta": d, "delta_prime": dp, "alpha": a2,
                     "bound": bound, "smallest_qualifying": worst},
        )
    return SuiteReport("lemma3", seed, [mass_ok, card_ok, lower])


def theorem1_equiv_suite(seed: int, instances: int = 200, tol: float = 1e-7) -> SuiteReport:
    rng = _rng(seed, "theorem1-equiv")
    lp_alt, lp_part, rand_a = (PropertyResult(n) for n in ("lp_vs_rewrite", "lp_vs_partition", "lp_vs_rewrite_random_A"))
    for _ in range(instances):
        m = int(rng.integers(2, 5))
        p = random_pmf(rng, m)
        M = range(1, m + 1)
        e_lp = query_exponent(p, M)
        e_alt = query_exponent_alt(p, M)
        e_part = divergence_exponent(p)[0]
        dump = lambda: {"pmf": p.to_json(), "lp": e_lp, "rewrite": e_alt, "partition": e_part}
        lp_alt.record(abs(e_lp - e_alt) <= tol, dump)
        lp_part.record(abs(e_lp - e_part) <= tol, dump)
        size = int(rng.integers(2, m + 1))
        A = sorted(int(a) for a in rng.choice(np.arange(1, m + 1), size=size, replace=False))
        ea, eb = query_exponent(p, A), query_exponent_alt(p, A)
        rand_a.record(abs(ea - eb) <= tol, lambda: {"pmf": p.to_json(), "A": A, "lp": ea, "rewrite": eb})
    return SuiteReport("theorem1-equiv", seed, [lp_alt, lp_part, rand_a])


def theorem3_suite(seed: int, instances: int = 200) -> SuiteReport:
    rng = _rng(seed, "theorem3")
    names = ("guarantee", "I0_mass", "shortlist_mass", "shortlist_size", "renyi_order_1_over_k")
    props = {n: PropertyResult(n) for n in names}
    done = attempts = 0
    while done < instances:
        attempts += 1
        if attempts > 20 * instances:
            break
        k = int(rng.integers(2, 4))
        model = random_interactive_model(rng, k)
        eps = model.error_probability()
        deltas = [d for d in (0.01, 0.05, 0.1, 0.2, 0.3) if d + math.sqrt(d + eps) < 1]
        if not deltas:
            continue
        delta = float(deltas[int(rng.integers(len(deltas)))])
        con = build_theorem3_strategy(model, delta, eps)
        cert = con.certificate()
        for n in names:
            props[n].record(cert[n], lambda: {
                "k": k, "delta": delta, "epsilon": eps, "theta": con.theta,
                "pmf": model.pmf.tolist(), "transcript": model.transcript.tolist(), "cr": model.cr.tolist(),
                "success": con.success, "guarantee": con.guarantee,
            })
        done += 1
    return SuiteReport("theorem3", seed, list(props.values()))


def random_key_transcript(rng: np.random.Generator, max_keys: int = 64, max_f: int = 16) -> KeyTranscriptPmf:
    nk = int(rng.integers(1, max_keys + 1))
    nf = int(rng.integers(1, max_f + 1))
    kind = rng.random()
    if kind < 0.15:
        P = np.outer(np.full(nk, 1 / nk), rng.dirichlet(np.ones(nf)))
    elif kind < 0.3:
        # nearly uniform and independent key
        base = np.outer(np.full(nk, 1 / nk), rng.dirichlet(np.ones(nf)))
        P = 0.9 * base + 0.1 * random_joint(rng, (nk, nf))
    else:
        P = random_joint(rng, (nk, nf))
    return KeyTranscriptPmf(P / P.sum())


def secrecy_suite(seed: int, instances: int = 500) -> SuiteReport:
    rng = _rng(seed, "secrecy")
    gap, ident, pinsker, rng_var = (PropertyResult(n) for n in
                                    ("strong_converse_gap", "s_in_divergence_identity", "pinsker", "s_var_range"))
    for _ in range(instances):
        kt = random_key_transcript(rng)
        dump = lambda: {"probs": kt.probs.tolist()}
        try:
            si = s_in(kt)
            ident.record(True, dump)
        except ContractError:
            ident.record(False, dump)
            continue
        sv = s_var(kt)
        lhs, rhs = strong_converse_gap(kt)
        gap.record(_le(lhs, rhs), dump)
        pinsker.record(_le(sv**2 / (2 * math.log(2)), si), dump)
        rng_var.record(-REL_SLACK <= sv <= 2 + REL_SLACK, dump)
    return SuiteReport("secrecy", seed, [gap, ident, pinsker, rng_var])


RUNNERS = {
    "lemma2": lemma2_suite,
    "lemma3": lemma3_suite,
    "theorem1-equiv": theorem1_equiv_suite,
    "theorem3": theorem3_suite,
    "secrecy": secrecy_suite,
}


def run_suite(name: str, seed: int = 0) -> list[SuiteReport]:
    if name == "all":
        return [RUNNERS[s](seed) for s in SUITES]
    if name not in RUNNERS:
        raise ValidationError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    return [RUNNERS[name](seed)]
