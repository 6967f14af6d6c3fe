"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line (visible even
under output capture) and then asserts. Run standalone with
``python -m tests.test_acceptance`` to get just the summary lines.
"""
import json
import math
import time

import numpy as np
import pytest

from crquery.cli import main
from crquery.fractional import query_exponent, query_exponent_alt
from crquery.partitions import CovarianceMatrix, divergence_exponent, gaussian_exponent
from crquery.pmf import JointPmf, dsbs, mutual_information
from crquery.protocols import Protocol, simulate
from crquery.renyi import iid_measure, source_coding_bounds
from crquery.verify import (lemma2_suite, lemma3_suite, random_joint, secrecy_suite,
                            theorem3_suite)

from .conftest import H_01

SEED = 7


def _report(capsys, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)
    return ok


def _suite_detail(rep):
    return ", ".join(f"{p.name} {p.violations}/{p.instances}" for p in rep.properties)


def criterion_1():
    rng = np.random.default_rng([SEED, 1])
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        shape = tuple(int(s) for s in rng.integers(2, 5, size=2))
        p = JointPmf.from_table(random_joint(rng, shape))
        worst = max(worst, abs(query_exponent(p, (1, 2)) - mutual_information(p, [1], [2])))
    dt = time.perf_counter() - t0
    return worst <= 1e-9 and dt < 1.0, f"max |E* - I| = {worst:.2e}, {dt:.2f}s"


def criterion_2():
    rng = np.random.default_rng([SEED, 2])
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        m = int(rng.integers(2, 5))
        shape = tuple(int(s) for s in rng.integers(2, 4, size=m))
        p = JointPmf.from_table(random_joint(rng, shape))
        M = range(1, m + 1)
        vals = [query_exponent(p, M), query_exponent_alt(p, M), divergence_exponent(p)[0]]
        worst = max(worst, max(vals) - min(vals))
    dt = time.perf_counter() - t0
    return worst <= 1e-7 and dt < 30.0, f"max spread {worst:.2e}, {dt:.2f}s"


def _logdet2(S):
    return math.log2(np.linalg.det(S))


def criterion_3():
    two = gaussian_exponent(CovarianceMatrix(np.array([[1.0, 0.5], [0.5, 1.0]])))
    closed = 0.5 * math.log2(4 / 3)
    ok2 = abs(two - closed) <= 1e-9 and abs(two - 0.207519) < 5e-7
    worst = 0.0
    for rho in (-0.45, -0.2, 0.1, 0.3, 0.5, 0.7, 0.9):
        S = np.full((3, 3), rho) + (1 - rho) * np.eye(3)
        full = _logdet2(S)
        # the four partitions with at least two blocks, listed by hand
        blocks = [[[0], [1], [2]], [[0, 1], [2]], [[0, 2], [1]], [[1, 2], [0]]]
        vals = []
        for pi in blocks:
            s = sum(_logdet2(S[np.ix_(b, b)]) for b in pi)
            vals.append(0.5 * (s - full) / (len(pi) - 1))
        worst = max(worst, abs(gaussian_exponent(CovarianceMatrix(S)) - min(vals)))
    return ok2 and worst <= 1e-9, f"2x2 value {two:.9f}, 3x3 max deviation {worst:.2e}"


def criterion_4():
    t0 = time.perf_counter()
    rep = lemma3_suite(SEED, instances=1000, max_atoms=64, exhaustive_atoms=16)
    dt = time.perf_counter() - t0
    return rep.passed and dt < 60.0, f"{_suite_detail(rep)}, {dt:.2f}s"


def criterion_5():
    rep = lemma2_suite(SEED, instances=500, max_side=64)
    active = ", ".join(f"{p.name} hypothesis met {p.active}" for p in rep.properties)
    return rep.passed, f"{_suite_detail(rep)}; {active}"


def criterion_6():
    rep = theorem3_suite(SEED, instances=200)
    n = rep.properties[0].instances
    return rep.passed and n == 200, _suite_detail(rep)


def criterion_7():
    p = dsbs(0.1)
    proto = Protocol.slepian_wolf(p, 0.2, SEED)
    t0 = time.perf_counter()
    runs = {n: simulate(p, proto, n, 500, 0.1, SEED) for n in (8, 12, 16)}
    dt = time.perf_counter() - t0
    exps = [runs[n].exponent_quantile for n in (8, 12, 16)]
    target = (1 - H_01) - 0.15
    checks = {
        "success": runs[16].success_rate >= 0.8,
        "nondecreasing": all(a <= b for a, b in zip(exps, exps[1:])),
        "threshold": exps[-1] >= target,
        "runtime": dt < 120.0,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"success@16 {runs[16].success_rate:.3f}, exponents {[round(e, 4) for e in exps]}, "
              f"need >= {target:.4f} at n=16, {dt:.1f}s")
    if failed:
        detail += f"; failed: {', '.join(failed)}"
    return not failed, detail


def criterion_8():
    rep = secrecy_suite(SEED, instances=500)
    wanted = {"strong_converse_gap", "s_in_divergence_identity"}
    ok = all(p.passed for p in rep.properties if p.name in wanted)
    return ok, _suite_detail(rep)


def criterion_9():
    mu1 = {0: 0.9, 1: 0.1}
    alphas = (0.8, 0.9, 1.1, 1.2)
    curves = [source_coding_bounds(iid_measure(mu1, n), n, alphas) for n in range(1, 11)]
    first = curves[0]
    drift = max(
        max(abs(a - b) for a, b in zip(c.lower_curve + c.upper_curve, first.lower_curve + first.upper_curve))
        for c in curves
    )
    lo, hi = first.lower_curve, first.upper_curve  # both ordered toward alpha = 1
    brackets = max(lo) < H_01 < min(hi)
    tightening = all(a < b for a, b in zip(lo, lo[1:])) and all(a > b for a, b in zip(hi, hi[1:]))
    ok = drift <= 1e-12 and brackets and tightening
    return ok, (f"lower {[round(v, 5) for v in lo]} < 0.46900 < upper {[round(v, 5) for v in hi]}, "
                f"drift over n=1..10 {drift:.1e}")


DETERMINISM_COMMANDS = [
    ["simulate", "--protocol", "sw2", "--n", "10", "--trials", "100", "--seed", "11"],
    ["simulate", "--protocol", "sw2", "--n", "8", "--trials", "100", "--seed", "11", "--include-failures",
     "--format", "csv"],
    ["simulate", "--protocol", "omniscience", "--n", "8", "--trials", "100", "--seed", "5"],
    ["simulate", "--protocol", "none", "--n", "8", "--trials", "100", "--seed", "5"],
    ["verify", "--suite", "all", "--seed", "3"],
    ["verify", "--suite", "lemma3", "--seed", "4", "--format", "csv"],
]


def criterion_10(tmp_path):
    pmf = tmp_path / "dsbs.json"
    pmf.write_text(json.dumps(dsbs(0.1).to_json()))
    mismatched = []
    for i, cmd in enumerate(DETERMINISM_COMMANDS):
        outs = []
        for rep in range(2):
            target = tmp_path / f"out{i}_{rep}"
            argv = list(cmd) + ["--reproducible", "--output", str(target)]
            if cmd[0] == "simulate":
                argv += ["--pmf", str(pmf)]
            if main(argv) != 0:
                mismatched.append(" ".join(cmd))
                break
            outs.append(target.read_bytes())
        if len(outs) == 2 and outs[0] != outs[1]:
            mismatched.append(" ".join(cmd))
    detail = f"{len(DETERMINISM_COMMANDS) - len(mismatched)}/{len(DETERMINISM_COMMANDS)} commands byte-identical"
    return not mismatched, detail


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number, capsys):
    ok, detail = globals()[f"criterion_{number}"]()
    assert _report(capsys, number, ok, detail), detail


def test_criterion_10(tmp_path, capsys):
    ok, detail = criterion_10(tmp_path)
    assert _report(capsys, 10, ok, detail), detail


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for k in range(1, 10):
        _report(None, k, *globals()[f"criterion_{k}"]())
    with tempfile.TemporaryDirectory() as d:
        _report(None, 10, *criterion_10(Path(d)))
