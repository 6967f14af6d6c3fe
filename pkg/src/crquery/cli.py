"""Command line entry point: crquery <command> [options].

Exit status: 0 ok, 2 invalid input, 3 resource guard, 4 contract or
property violation. Output is written only after a command succeeds.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CRQueryError, ValidationError
from .fractional import dual_of, exponent_from_value, query_exponent_alt, solve_lp
from .partitions import CovarianceMatrix, divergence_exponent, gaussian_argmin
from .pmf import JointPmf, Measure, as_subset
from .protocols import Protocol, simulate
from .renyi import cardinality_lower_bound, high_mass_set
from .secrecy import KeyTranscriptPmf, s_in, s_var, strong_converse_gap
from .verify import SUITES, run_suite

SIG_DIGITS = 12


@dataclass
class ExperimentConfig:
    command: str
    pmf: str | None = None
    cov: str | None = None
    measure: str | None = None
    joint: str | None = None
    subset: str | None = None
    method: str = "lp"
    exact: bool = False
    protocol: str = "sw2"
    split: str = "uniform"
    n: int = 8
    trials: int = 500
    seed: int | None = None
    delta: float | None = None
    delta_prime: float | None = None
    alpha: float | None = None
    eta: float = 0.2
    quantile: float = 0.1
    include_failures: bool = False
    trace: str | None = None
    suite: str = "all"
    output: str | None = None
    format: str = "json"
    reproducible: bool = False
    threads: int | None = None


def _round(obj):
    if isinstance(obj, float):
        return float(f"{obj:.{SIG_DIGITS}g}") if np.isfinite(obj) else str(obj)
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _read_json(path: str | None, what: str):
    if path is None:
        raise ValidationError(f"--{what} is required")
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ValidationError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what} file is not valid JSON: {exc}") from None


def parse_subset(text: str | None, m: int) -> tuple[int, ...]:
    if text is None:
        return tuple(range(1, m + 1))
    try:
        items = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ValidationError(f"subset must be a comma list of terminal labels, got {text!r}") from None
    return as_subset(items, m)


def _load_measure(obj) -> Measure:
    if isinstance(obj, dict) and "weights" in obj:
        obj = obj["weights"]
    if isinstance(obj, dict) and "masses" in obj:
        obj = obj["masses"]
    if isinstance(obj, list):
        return Measure.from_array(obj)
    if isinstance(obj, dict):
        return Measure(obj)
    raise ValidationError("measure JSON must be a list of masses or a {label: mass} map")


def _capacity(cfg: ExperimentConfig) -> dict:
    p = JointPmf.from_json(_read_json(cfg.pmf, "pmf"))
    A = parse_subset(cfg.subset, p.m)
    if cfg.method == "partition":
        if len(A) != p.m:
            raise ValidationError("the partition method requires the target set to be all terminals")
        value, pi = divergence_exponent(p)
        return {"e_star": value, "method": "partition", "partition": str(pi)}
    if cfg.method == "alt":
        return {"e_star": query_exponent_alt(p, A, exact=cfg.exact), "method": "alt"}
    if p.m < 2:
        raise ValidationError("source model needs at least two terminals")
    fp, value = solve_lp(p, A, exact=cfg.exact)
    e_star = exponent_from_value(p, value)
    try:
        dual = [{"subset": list(c), "weight": w} for c, w in dual_of(fp).items() if w > 0]
    except CRQueryError:
        dual = None
    return {
        "e_star": e_star,
        "method": "lp",
        "lambda": [{"subset": list(B), "weight": w} for B, w in fp.support()],
        "lambda_sum": fp.lambda_sum,
        "dual": dual,
    }


def _gaussian(cfg: ExperimentConfig) -> dict:
    obj = _read_json(cfg.cov, "cov")
    matrix = obj["matrix"] if isinstance(obj, dict) and "matrix" in obj else obj
    value, pi = gaussian_argmin(CovarianceMatrix(np.asarray(matrix, dtype=float)))
    return {"c": value, "partition": str(pi)}


def _simulate(cfg: ExperimentConfig) -> dict:
    if cfg.seed is None:
        raise ValidationError("simulate needs an explicit --seed")
    p = JointPmf.from_json(_read_json(cfg.pmf, "pmf"))
    if cfg.protocol == "sw2":
        proto = Protocol.slepian_wolf(p, cfg.eta, cfg.seed)
    elif cfg.protocol == "omniscience":
        proto = Protocol.omniscience(p, cfg.eta, cfg.seed, parse_subset(cfg.subset, p.m), cfg.split)
    elif cfg.protocol == "none":
        proto = Protocol.silent(p.m, cfg.seed)
    else:
        raise ValidationError(f"unknown protocol {cfg.protocol!r}")
    res = simulate(p, proto, cfg.n, cfg.trials, cfg.quantile, cfg.seed,
                   include_failures=cfg.include_failures, threads=cfg.threads)
    if cfg.trace:
        res.write_trace(cfg.trace)
    return {
        "success_rate": res.success_rate,
        "exponent_quantile": res.exponent_quantile,
        "rate_used": list(res.rate_used),
        "bins": list(res.bins),
        "n": res.n,
        "trials": res.trials,
        "quantile": res.quantile,
    }


def _bounds(cfg: ExperimentConfig) -> dict:
    mu = _load_measure(_read_json(cfg.measure, "measure"))
    if cfg.delta is None or cfg.alpha is None:
        raise ValidationError("bounds needs --delta and --alpha")
    if cfg.alpha > 1:
        if cfg.delta_prime is None:
            raise ValidationError("alpha > 1 needs --delta-prime")
        return {"lower_bound": cardinality_lower_bound(mu, cfg.delta, cfg.delta_prime, cfg.alpha)}
    hs = high_mass_set(mu, cfg.delta, cfg.alpha)
    return {"set_size": len(hs), "mass": hs.mass, "bound": hs.cardinality_bound}


def _secrecy(cfg: ExperimentConfig) -> dict:
    obj = _read_json(cfg.joint, "joint")
    probs = obj["probs"] if isinstance(obj, dict) else obj
    kt = KeyTranscriptPmf(np.asarray(probs, dtype=float))
    lhs, rhs = strong_converse_gap(kt)
    return {"s_in": s_in(kt), "s_var": s_var(kt), "sc_lhs": lhs, "sc_rhs": rhs}


def _verify(cfg: ExperimentConfig) -> dict:
    reports = run_suite(cfg.suite, cfg.seed if cfg.seed is not None else 0)
    return {"pass": all(r.passed for r in reports), "suites": [r.as_dict() for r in reports]}


HANDLERS = {
    "capacity": _capacity,
    "gaussian": _gaussian,
    "simulate": _simulate,
    "bounds": _bounds,
    "secrecy": _secrecy,
    "verify": _verify,
}


def _csv_text(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "suites" in result:
        w.writerow(["suite", "property", "pass", "instances", "violations"])
        for s in result["suites"]:
            for prop in s["properties"]:
                w.writerow([s["suite"], prop["name"], int(prop["pass"]), prop["instances"], prop["violations"]])
        return buf.getvalue()
    keys = list(result)
    w.writerow(keys)
    w.writerow([json.dumps(v) if isinstance(v, (list, dict)) else v for v in result.values()])
    return buf.getvalue()


def render(cfg: ExperimentConfig, result: dict) -> str:
    result = _round(result)
    if not cfg.reproducible:
        result["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if cfg.format == "csv":
        return _csv_text(result)
    return json.dumps(result, indent=2) + "\n"


def run(cfg: ExperimentConfig) -> tuple[int, dict | None]:
    """Execute one command; returns (exit status, result). Writes output only on success."""
    if cfg.command not in HANDLERS:
        raise ValidationError(f"unknown command {cfg.command!r}")
    if cfg.threads is None and os.environ.get("CRQUERY_THREADS"):
        cfg.threads = int(os.environ["CRQUERY_THREADS"])
    result = HANDLERS[cfg.command](cfg)
    text = render(cfg, result)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    status = 0
    if cfg.command == "verify" and not result["pass"]:
        status = 4
    return status, result


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--reproducible", action="store_true", help="omit the timestamp field")
    common.add_argument("--threads", type=int, help="worker cap (default $CRQUERY_THREADS or 1)")

    ap = argparse.ArgumentParser(prog="crquery", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"crquery {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("capacity", parents=[common], help="optimum query exponent of a joint pmf")
    c.add_argument("--pmf", required=True)
    c.add_argument("--set", dest="subset", help="target terminals, e.g. 1,2,3 (default all)")
    c.add_argument("--method", choices=("lp", "alt", "partition"), default="lp")
    c.add_argument("--exact", action="store_true", help="rational arithmetic in the simplex")

    g = sub.add_parser("gaussian", parents=[common], help="Gaussian log-determinant exponent")
    g.add_argument("--cov", required=True)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo query exponent")
    s.add_argument("--pmf", required=True)
    s.add_argument("--protocol", choices=("sw2", "omniscience", "none"), default="sw2")
    s.add_argument("--set", dest="subset")
    s.add_argument("--split", choices=("uniform", "vertex"), default="uniform")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--trials", type=int, default=500)
    s.add_argument("--eta", type=float, default=0.2)
    s.add_argument("--quantile", type=float, default=0.1)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--include-failures", action="store_true")
    s.add_argument("--trace", help="per-trial CSV trace")

    b = sub.add_parser("bounds", parents=[common], help="large-probability set bounds")
    b.add_argument("--measure", required=True)
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--alpha", type=float, required=True)
    b.add_argument("--delta-prime", type=float)

    k = sub.add_parser("secrecy", parents=[common], help="security indices of a key")
    k.add_argument("--joint", required=True)

    v = sub.add_parser("verify", parents=[common], help="run property suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig(**{k: v for k, v in vars(args).items() if k in ExperimentConfig.__dataclass_fields__})
    try:
        status, _ = run(cfg)
    except CRQueryError as exc:
        print(f"crquery {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return status


if __name__ == "__main__":
    sys.exit(main())
