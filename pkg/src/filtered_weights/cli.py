"""Command-line entry points and report emission."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import numeric as nm
from .constants import a1_const, all_constants, testing_backward, testing_forward
from .instances import GeneratorSpec, Instance, InstanceError, KINDS, WEIGHT_LAWS, generate, load_instance, trial_seed
from .norms import estimate_strong_norm
from .principal import carleson_check, check_properties, maximal_representation_check, principal_cover
from .space import SpaceError
from .verify import (
    C_BUDGET,
    TOL,
    VerificationReport,
    verify_carleson,
    verify_maximal_bounds,
    verify_remark28,
    verify_representation,
    verify_sparsity,
    verify_strong,
    verify_weak,
    weak_constant,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
VERIFY_TARGETS = ("strong", "weak", "maximal", "sparsity", "carleson", "remark28", "representation")
SEARCH_TARGETS = {
    "strong-upper": ("strong", "upper: norm <= C (bw*A1(w) + fw*A1(sigma))"),
    "strong-lower": ("strong", "lower: testing_forward <= norm"),
    "weak-upper": ("weak", "upper: weak(T f) <= C* fw ||f|| (all samples)"),
    "weak-converse": ("weak", "converse: testing_forward <= weak norm"),
    "maximal-lemma": ("maximal", "lemma upper: norm <= C sp_star"),
    "maximal-bound1": ("maximal", "bound (1): norm <= C B_p^(1/p)"),
    "maximal-bound2": ("maximal", "bound (2): norm <= C (A_p A*inf(sigma))^(1/p)"),
    "maximal-bound3": ("maximal", "bound (3): norm <= C mixed (1 + log2 A_p)^(1/p)"),
    "doob": ("maximal", "doob: ||Mf||_p <= p' ||f||_p (all samples)"),
    "carleson": ("carleson", "carleson ratio <= 2(p')^p"),
}


class UsageError(Exception):
    pass


# -- provenance and output ----------------------------------------------------


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def threads() -> int:
    raw = os.environ.get("FMS_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return min(8, os.cpu_count() or 1)


def _json_default(x):
    if isinstance(x, Fraction):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x).__name__}")


def _normalize(doc):
    """Round-trip through JSON so that JSON and CSV see the same values."""
    return json.loads(json.dumps(doc, default=_json_default, allow_nan=True))


def flatten(doc, prefix: str = "") -> list[tuple[str, object]]:
    rows = []
    if isinstance(doc, dict):
        for k in sorted(doc):
            rows.extend(flatten(doc[k], f"{prefix}.{k}" if prefix else str(k)))
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            rows.extend(flatten(v, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, doc))
    return rows


def render_report(doc: dict, fmt: str = "json") -> str:
    doc = _normalize(doc)
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for k, v in flatten(doc):
            writer.writerow([k, json.dumps(v)])
        return buf.getvalue()
    raise UsageError(f"unknown format {fmt!r}")


def save_report(doc: dict, path, fmt: str = "json") -> None:
    Path(path).write_text(render_report(doc, fmt))


def read_csv_report(text: str) -> dict:
    """Flat ``key -> value`` view of a CSV report."""
    rows = list(csv.reader(io.StringIO(text)))
    return {k: json.loads(v) for k, v in rows[1:]}


# -- instance sources ---------------------------------------------------------


def _spec_from_args(args, trial: int) -> GeneratorSpec:
    depth = args.depth if args.depth is not None else 3 + trial % 3
    params = tuple(args.law_params) if args.law_params else {"lognormal": (0.0, 1.0), "power": (0.5,), "two-point": (1.0, 4.0)}[args.law]
    return GeneratorSpec(args.kind, depth, args.branching, args.law, params, trial_seed(args.seed, trial), args.rational)


def _instances(args) -> list[tuple[int, Instance]]:
    if args.instance:
        inst = load_instance(args.instance, True if args.rational else None)
        return [(0, inst)]
    return [(t, generate(_spec_from_args(args, t))) for t in range(args.trials)]


def _p(args, inst: Instance):
    return nm.to_fraction(args.p) if args.p is not None and inst.exact else (args.p if args.p is not None else inst.p)


def _q(args, inst: Instance, p):
    if args.q is not None:
        return nm.to_fraction(args.q) if inst.exact else args.q
    return inst.q if inst.q is not None else p


def _alpha(inst: Instance):
    if inst.alpha is None:
        raise InstanceError("alpha: missing")
    return inst.alpha


def _run_verify(target: str, args, trial: int, inst: Instance) -> VerificationReport:
    p = _p(args, inst)
    seed = trial_seed(args.seed, trial)
    common = dict(mode=args.mode, tol=args.tol)
    if target == "strong":
        q = _q(args, inst, p)
        return verify_strong(inst.space, _alpha(inst), inst.weight("sigma", "w"), inst.weight("w"), p, q, args.c_budget, seed=seed, budget=args.budget, **common)
    if target == "weak":
        q = _q(args, inst, p)
        return verify_weak(inst.space, _alpha(inst), inst.weight("sigma", "w"), inst.weight("w"), p, q, args.samples, seed=seed, budget=args.budget, **common)
    if target == "maximal":
        w = inst.weight("w")
        v = w if (args.same_weights or (not args.instance and trial % 2 == 0)) else inst.weight("v", "w")
        return verify_maximal_bounds(inst.space, v, w, p, args.c_budget, seed=seed, budget=args.budget, trials=args.samples, **common)
    if target == "remark28":
        return verify_remark28(inst.space, inst.weight("w"), mode=args.mode, tol=args.tol)
    h = inst.function("h")
    w = inst.weights.get("w")
    if target == "sparsity":
        return verify_sparsity(inst.space, h, w, args.level, args.scale, tol=args.tol)
    if target == "carleson":
        return verify_carleson(inst.space, h, w, p, args.level, args.scale, tol=args.tol)
    if target == "representation":
        return verify_representation(inst.space, h, w, args.level, args.scale, tol=args.tol)
    raise UsageError(f"unknown verify target {target!r}")


def _map_trials(fn, items):
    """Apply ``fn`` to every ``(trial, instance)`` in parallel; results keep input order."""
    if len(items) <= 1 or threads() == 1:
        return [fn(t, inst) for t, inst in items]
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        return list(pool.map(lambda ti: fn(*ti), items))


def _summary(reports: list[tuple[int, Instance, VerificationReport]]) -> dict:
    checks: dict = {}
    for t, inst, rep in reports:
        for c in rep.checks:
            s = checks.setdefault(c.name, {"hard": c.hard, "failures": 0, "max_ratio": 0.0, "argmax_trial": t})
            if c.hard and not c.passed:
                s["failures"] += 1
            r = c.ratio if math.isfinite(c.ratio) else 1e308
            if r > s["max_ratio"]:
                s["max_ratio"], s["argmax_trial"] = r, t
    return {
        "instances": len(reports),
        "failed_instances": sum(not rep.passed for _, _, rep in reports),
        "checks": checks,
    }


def _provenance(args, argv) -> dict:
    return {
        "argv": list(argv),
        "seed": args.seed,
        "mode": args.mode,
        "tol": args.tol,
        "c_budget": args.c_budget,
        "rational": args.rational,
        "git_describe": git_describe(),
        "threads": threads(),
    }


# -- subcommands ----------------------------------------------------------------


def cmd_verify(args, argv) -> tuple[dict, bool]:
    if args.probe_a1:
        if args.target != "strong":
            raise UsageError("--probe-a1 applies to 'verify strong' only")
        return probe_a1(args), True
    items = _instances(args)
    reports = _map_trials(lambda t, inst: (t, inst, _run_verify(args.target, args, t, inst)), items)
    doc = {
        "command": f"verify {args.target}",
        "summary": _summary(reports),
        "reports": [{"trial": t, "instance": inst.name, **rep.as_dict()} for t, inst, rep in reports],
    }
    if args.target == "weak":
        q = float(_q(args, items[0][1], _p(args, items[0][1]))) if items else 2.0
        doc["weak_constant"] = {"q": q, "value": weak_constant(q)}
        print(f"C* = 2^(q+1)(1+q)/q (1+q)^(1/q) = {weak_constant(q):.6f} at q = {q:g}", file=sys.stderr)
    return doc, all(rep.passed for _, _, rep in reports)


def cmd_search(args, argv) -> tuple[dict, bool]:
    target, check = SEARCH_TARGETS[args.inequality]
    items = _instances(args)
    reports = _map_trials(lambda t, inst: (t, inst, _run_verify(target, args, t, inst)), items)
    best = None
    for t, inst, rep in reports:
        c = rep.check(check) if any(x.name == check for x in rep.checks) else None
        if c is not None and (best is None or c.ratio > best[2].ratio):
            best = (t, inst, c)
    doc = {"command": "search", "inequality": args.inequality, "check": check, "instances": len(reports)}
    if best is not None:
        doc.update({"max_ratio": best[2].ratio, "trial": best[0], "instance": best[1].name, "witness": best[2].as_dict()})
    return doc, all(rep.passed for _, _, rep in reports)


def cmd_constants(args, argv) -> tuple[dict, bool]:
    out = []
    for t, inst in _instances(args):
        p = _p(args, inst)
        w = inst.weight("w")
        v = inst.weights.get("v", w)
        consts = {k: (c.as_dict() if hasattr(c, "as_dict") else float(c)) for k, c in all_constants(inst.space, w, v, p, args.mode).items()}
        if inst.alpha is not None:
            q = _q(args, inst, p)
            sigma = inst.weight("sigma", "w")
            consts["testing_forward"] = testing_forward(inst.space, inst.alpha, sigma, w, p, q, args.mode).as_dict()
            consts["testing_backward"] = testing_backward(inst.space, inst.alpha, sigma, w, p, q, args.mode).as_dict()
        out.append({"trial": t, "instance": inst.name, "p": float(p), "constants": consts})
    return {"command": "constants", "results": out}, True


def cmd_principal(args, argv) -> tuple[dict, bool]:
    out, ok = [], True
    for t, inst in _instances(args):
        p = _p(args, inst)
        fams = principal_cover(inst.space, inst.function("h"), inst.weights.get("w"), args.level)
        if args.scale is not None:
            fams = [f for f in fams if f.origin_scale == args.scale]
        entries = []
        for fam in fams:
            props = {k: r.as_dict() for k, r in check_properties(fam, args.tol).items()}
            rep = maximal_representation_check(fam, args.tol)
            carl = carleson_check(fam, p, args.tol)
            good = all(r["passed"] for r in props.values()) and rep.passed and carl.passed
            ok &= good
            entries.append({"family": fam.to_dict(), "properties": props, "representation": rep.as_dict(), "carleson": carl.as_dict(), "passed": good})
        out.append({"trial": t, "instance": inst.name, "families": entries})
    return {"command": "principal-sets", "results": out}, ok


def probe_a1(args) -> dict:
    """Ratio trend of the strong norm against the testing constants alone as A1 constants grow.

    Weights are log-normal with increasing spread; no conclusion is drawn.
    """
    rows = []
    spreads = args.spreads or [0.25, 0.5, 1.0, 1.5, 2.0, 3.0]
    per = max(1, args.trials)
    for spread in spreads:
        ratios, a1s = [], []
        for t in range(per):
            spec = GeneratorSpec(args.kind, args.depth or 4, args.branching, "lognormal", (0.0, spread), trial_seed(args.seed, t), False)
            inst = generate(spec)
            p = float(args.p or 2)
            q = float(args.q or p)
            s, w = inst.weight("sigma"), inst.weight("w")
            fw = float(testing_forward(inst.space, inst.alpha, s, w, p, q).value)
            bw = float(testing_backward(inst.space, inst.alpha, s, w, p, q).value)
            est = estimate_strong_norm(inst.space, inst.alpha, s, w, p, q, args.budget, trial_seed(args.seed, t), draws=200)
            ratios.append(est.value / (fw + bw))
            a1s.append(max(float(a1_const(inst.space, w)), float(a1_const(inst.space, s))))
        rows.append({"spread": spread, "max_a1": max(a1s), "median_a1": float(np.median(a1s)), "max_ratio": max(ratios), "median_ratio": float(np.median(ratios))})
    return {"command": "verify strong --probe-a1", "statistic": "norm / (testing_forward + testing_backward)", "trend": rows}


# -- argument parsing -----------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    g = c.add_argument_group("global options")
    g.add_argument("--instance", help="instance JSON file (otherwise instances are generated)")
    g.add_argument("--trials", type=int, default=1, help="number of generated instances")
    g.add_argument("--mode", choices=("atoms", "exhaustive"), default="atoms", help="set enumeration for suprema")
    g.add_argument("--rational", action="store_true", help="exact rational arithmetic")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tol", type=float, default=TOL, help="relative tolerance for float comparisons")
    g.add_argument("--c-budget", type=float, default=C_BUDGET, help="constant standing in for unspecified absolute constants")
    g.add_argument("--out", help="write the report here instead of stdout")
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--p", type=float, default=None, help="override the instance exponent p")
    g.add_argument("--q", type=float, default=None, help="override the instance exponent q")
    g.add_argument("--kind", choices=KINDS, default="dyadic")
    g.add_argument("--depth", type=int, default=None, help="generated depth (default cycles 3, 4, 5)")
    g.add_argument("--branching", type=int, default=2)
    g.add_argument("--law", choices=WEIGHT_LAWS, default="lognormal")
    g.add_argument("--law-params", type=float, nargs="+", default=None)
    g.add_argument("--level", type=int, default=0, help="starting level i for principal sets")
    g.add_argument("--scale", type=int, default=None, help="single dyadic scale k (default: every scale)")
    g.add_argument("--budget", type=int, default=8, help="ascent restarts per norm estimate")
    g.add_argument("--samples", type=int, default=200, help="random inputs per instance for pointwise checks")
    g.add_argument("--same-weights", action="store_true", help="maximal: use v = w")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="filtered-weights", description="Two-weight inequalities on finite filtered spaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="weight characteristics of an instance")
    sub.add_parser("principal-sets", parents=[common], help="principal set families and their properties")
    v = sub.add_parser("verify", parents=[common], help="run a verifier")
    v.add_argument("target", choices=VERIFY_TARGETS)
    v.add_argument("--probe-a1", action="store_true", help="strong: ratio trend as A1 constants grow")
    v.add_argument("--spreads", type=float, nargs="+", default=None, help="log-normal spreads for --probe-a1")
    s = sub.add_parser("search", parents=[common], help="largest observed ratio for one inequality")
    s.add_argument("inequality", choices=sorted(SEARCH_TARGETS))
    return parser


def run_command(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    handler = {"constants": cmd_constants, "principal-sets": cmd_principal, "verify": cmd_verify, "search": cmd_search}[args.command]
    try:
        doc, ok = handler(args, argv)
    except (InstanceError, SpaceError, UsageError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    doc["provenance"] = _provenance(args, argv)
    doc["passed"] = ok
    text = render_report(doc, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
