"""Command-line front end; every subcommand prints one JSON report.

Exit codes: 0 success, 2 input error, 3 budget exceeded or result not
certified, 4 internal contract failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import cardmin as cm
from . import extensions as ext
from . import matroids as mt
from . import maximize as mx
from . import sfm
from .errors import BudgetError, ContractError, InputError, ParseError
from .formats import KINDS, parse_graphic, parse_instance, serialize_instance
from .setfn import TOL, brute_optimize, check_property_bruteforce

SCHEMA = 1
VERIFY_LIMIT = 12
EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_CONTRACT = 0, 2, 3, 4
CHECKABLE = ("submodular", "monotone", "symmetric", "nonnegative")
COMMANDS = ("eval", "lovasz", "multilinear", "closure", "check", "sfm", "maxmatroid", "cardmin")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", required=True, help="instance file")
    common.add_argument("--kind", required=True, choices=KINDS)
    common.add_argument("--x", help="point in ground order: comma list, or @file")
    common.add_argument("--set", dest="subset", help="comma-separated labels")
    common.add_argument("--k", type=int)
    common.add_argument("--v1", help="restrict cardmin to this seed element")
    common.add_argument("--matroid", help="uniform:K | partition:a,b:1;c,d:1 | graphic:PATH")
    common.add_argument("--steps", type=int, help="continuous greedy step count (default n^2)")
    common.add_argument("--samples", type=int, help="Monte Carlo samples (default: exact when possible)")
    common.add_argument("--seed", type=int, help="RNG seed (default $SUBMOD_SEED or 0)")
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--max-iter", type=int, default=50000)
    common.add_argument("--json", default="-", help="output path, '-' for stdout")
    common.add_argument("--brute", action="store_true", help="use exhaustive search instead of the algorithm")
    common.add_argument("--verify", action="store_true", help="compare with brute force and report the ratio")
    common.add_argument("--property", default="submodular", choices=CHECKABLE)
    common.add_argument("--closure", default="convex", choices=("convex", "concave"))

    parser = _Parser(prog="submod", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _point(arg: str | None, n: int) -> np.ndarray:
    if arg is None:
        raise InputError("--x is required for this command")
    text = _read(arg[1:]) if arg.startswith("@") else arg
    try:
        x = [float(t) for t in text.replace(",", " ").split()]
    except ValueError as e:
        raise InputError(f"bad coordinate in --x: {e}") from None
    if len(x) != n:
        raise InputError(f"--x has {len(x)} coordinates, ground set has {n}")
    if any(not 0.0 <= v <= 1.0 for v in x):
        raise InputError("--x coordinates must lie in [0, 1]")
    return np.array(x)


def _subset(arg: str | None):
    if arg is None:
        raise InputError("--set is required for this command")
    return [t for t in arg.split(",") if t]


def _matroid(arg: str | None, ground, base: Path) -> mt.Matroid:
    if not arg:
        raise InputError("--matroid is required for this command")
    family, _, rest = arg.partition(":")
    if family == "uniform":
        try:
            return mt.uniform(ground, int(rest))
        except ValueError:
            raise InputError(f"bad uniform rank {rest!r}") from None
    if family == "partition":
        blocks, caps = [], []
        for part in filter(None, rest.split(";")):
            members, sep, cap = part.rpartition(":")
            if not sep:
                raise InputError(f"partition block {part!r} needs ':capacity'")
            blocks.append([t for t in members.split(",") if t])
            try:
                caps.append(int(cap))
            except ValueError:
                raise InputError(f"bad capacity {cap!r}") from None
        return mt.partition(ground, blocks, caps)
    if family == "graphic":
        path = Path(rest)
        edges = parse_graphic(_read(str(path if path.is_absolute() else base / path)))
        if set(edges) != set(ground.labels):
            raise InputError("graphic matroid elements must match the instance ground set")
        return mt.graphic({e: edges[e] for e in ground.labels})
    raise InputError(f"unknown matroid family {family!r}")


def _ratio(value: float, opt: float):
    """``value / opt``; 1.0 when they agree, None when ``opt`` is 0 and ``value`` is not."""
    if abs(value - opt) <= TOL:
        return 1.0
    if abs(opt) <= TOL:
        return None
    return value / opt


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SUBMOD_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"SUBMOD_SEED must be an integer, got {env!r}") from None


def _params(args) -> sfm.SolveParams:
    return sfm.SolveParams(max_iterations=args.max_iter, tolerance=args.tol, seed=_seed(args))


def _cmd_eval(args, f, report):
    s = _subset(args.subset)
    report["result"] = sorted(f.ground.labels_of(f.ground.mask(s)))
    report["value"] = f.evaluate(s)


def _cmd_lovasz(args, f, report):
    x = _point(args.x, f.n)
    chain = ext.chain_distribution(x, f.ground)
    report["value"] = ext.lovasz_eval(f, x)
    report["chain"] = [[sorted(f.ground.labels_of(s)), float(p)] for s, p in chain.support()]
    report["subgradient"] = ext.lovasz_subgradient(f, x).tolist()


def _cmd_multilinear(args, f, report):
    x = _point(args.x, f.n)
    if args.samples is None or args.brute:
        report["value"] = ext.multilinear_eval_exact(f, x)
        report["mode"] = "exact"
    else:
        est, se = ext.multilinear_eval_sampled(f, x, args.samples, _seed(args))
        report.update(value=est, standard_error=se, mode="sampled")


def _cmd_closure(args, f, report):
    x = _point(args.x, f.n)
    solve = ext.convex_closure_bruteforce if args.closure == "convex" else ext.concave_closure_bruteforce
    res = solve(f, x)
    report["value"] = res.value
    report["closure"] = args.closure
    report["distribution"] = [
        [sorted(f.ground.labels_of(s)), float(p)] for s, p in sorted(res.distribution.probs.items())
    ]


def _cmd_check(args, f, report):
    w = check_property_bruteforce(f, args.property)
    report["property"] = args.property
    report["holds"] = w is None
    if w is not None:
        report["witness"] = {
            "kind": w.kind,
            "first": sorted(w.first),
            "second": sorted(w.second),
            "element": w.element,
            "lhs": float(w.lhs),
            "rhs": float(w.rhs),
        }


def _cmd_sfm(args, f, report):
    if args.brute:
        s, v = brute_optimize(f, "min")
        report.update(result=sorted(s), value=v, certified=True)
    else:
        rep = sfm.minimize(f, _params(args))
        report.update(
            result=sorted(rep.minimizer),
            value=rep.value,
            iterations=rep.iterations,
            certified=rep.certified,
            lower_bound=rep.lower_bound,
        )
    if args.verify:
        _, opt = brute_optimize(f, "min", limit=VERIFY_LIMIT)
        report.update(optimum=opt, ratio=_ratio(report["value"], opt))


def _cmd_maxmatroid(args, f, report):
    m = _matroid(args.matroid, f.ground, Path(args.instance).parent)
    if args.brute:
        vals = f.all_values()
        best = min(
            (s for s in range(1 << f.n) if m.independent_mask(s)),
            key=lambda s: (-vals[s], bin(s).count("1"), f.ground.indices(s)),
        )
        report.update(result=sorted(f.ground.labels_of(best)), value=f.evaluate_mask(best), certified=True)
    else:
        mode = "sampled" if args.samples else "auto"
        rep = mx.maximize_matroid(
            f, m, args.steps, mode=mode, samples=args.samples or mx.DEFAULT_SAMPLES, seed=_seed(args)
        )
        report.update(
            result=sorted(rep.solution),
            value=rep.value,
            fractional_value=rep.fractional_value,
            steps=rep.trajectory.step_count,
            gradient_mode=rep.trajectory.gradient_mode,
            trades=len(rep.rounding.trades),
            iterations=rep.trajectory.step_count + len(rep.rounding.events),
            certified=rep.certified,
        )
    if args.verify:
        if f.n > VERIFY_LIMIT:
            raise BudgetError(f"--verify needs n <= {VERIFY_LIMIT}")
        opt = max(f.evaluate_mask(s) for s in range(1 << f.n) if m.independent_mask(s))
        report.update(optimum=opt, ratio=_ratio(report["value"], opt), bound=mx.APPROX_RATIO)


def _cmd_cardmin(args, f, report):
    if args.k is None:
        raise InputError("--k is required for cardmin")
    if args.brute:
        s, v = brute_optimize(f, "min", min_card=1, max_card=args.k)
        report.update(result=sorted(s), value=v, certified=True)
    else:
        seeds = None
        if args.v1 is not None:
            if args.v1 not in f.ground:
                raise InputError(f"--v1 {args.v1!r} is not in the ground set")
            seeds = [args.v1]
            report["warnings"].append("--v1 restricts the search; the factor-two bound needs that element in some optimal set")
        rep = cm.cardmin_symmetric(f, args.k, _params(args), check=f.n <= cm.SYMMETRY_CHECK_LIMIT, seeds=seeds)
        report.update(
            result=sorted(rep.solution),
            value=rep.value,
            certified=rep.certified,
            iterations=sum(1 for _ in rep.guesses),
            guesses=[
                {
                    "pinned": tr.pinned,
                    "relaxation": tr.lovasz_value,
                    "branch": tr.branch,
                    "candidates": [[sorted(q), v] for q, v in tr.candidates()],
                }
                for tr in rep.guesses
            ],
        )
    if args.verify:
        if f.n > VERIFY_LIMIT:
            raise BudgetError(f"--verify needs n <= {VERIFY_LIMIT}")
        _, opt = brute_optimize(f, "min", min_card=1, max_card=args.k)
        report.update(optimum=opt, ratio=_ratio(report["value"], opt), bound=2.0)


HANDLERS = {
    "eval": _cmd_eval,
    "lovasz": _cmd_lovasz,
    "multilinear": _cmd_multilinear,
    "closure": _cmd_closure,
    "check": _cmd_check,
    "sfm": _cmd_sfm,
    "maxmatroid": _cmd_maxmatroid,
    "cardmin": _cmd_cardmin,
}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def run(argv=None):
    """Parse ``argv``, run the command and return ``(exit_code, report)``."""
    t0 = time.perf_counter()
    report = {"schema": SCHEMA, "warnings": []}
    try:
        args = build_parser().parse_args(argv)
        report["command"] = args.command
        kind = args.kind
        text = _read(args.instance)
        inst = parse_instance(kind, text)
        report["instance"] = {
            "kind": kind,
            "digest": hashlib.sha256(serialize_instance(kind, inst).encode()).hexdigest(),
        }
        report["params"] = {
            k: v
            for k, v in sorted(vars(args).items())
            if k not in ("command", "json", "instance", "kind") and v is not None
        }
        report["params"]["seed"] = _seed(args)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            f = inst.oracle()
            HANDLERS[args.command](args, f, report)
        report["warnings"] += [str(w.message) for w in caught]
        report["ground"] = list(f.ground.labels)
        report["oracle_queries"] = f.queries
        code = EXIT_OK
        if not report.get("certified", True):
            code = EXIT_BUDGET
            report["warnings"].append("iteration budget exhausted before the result was certified")
    except ParseError as e:
        code, report["error"] = EXIT_INPUT, {"type": "parse", "message": str(e), "line": e.line}
    except InputError as e:
        code, report["error"] = EXIT_INPUT, {"type": "input", "message": str(e)}
    except BudgetError as e:
        code, report["error"] = EXIT_BUDGET, {"type": "budget", "message": str(e)}
    except ContractError as e:
        code, report["error"] = EXIT_CONTRACT, {"type": "contract", "message": str(e)}
    report["exit_code"] = code
    report["wall_time_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    return code, _jsonable(report)


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def _output_path(argv) -> str:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--json", default="-")
    return pre.parse_known_args(argv)[0].json


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    code, report = run(argv)
    out = _output_path(argv)
    text = dumps(report)
    if out == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as e:
            sys.stderr.write(f"cannot write {out}: {e.strerror}\n")
            return EXIT_INPUT
    if "error" in report:
        sys.stderr.write(f"error: {report['error']['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
