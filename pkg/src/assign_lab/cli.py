"""Command-line front end: ``assign-lab compute|verify|simulate|asymptotics``.

Exit codes: 0 success, 1 usage error, 2 engine hazard or limit,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from multiprocessing import get_context

from .exact import ExprSyntaxError, eval_at, parse_expr
from .pattern import BoundsError, ZeroPattern, parse_pattern_text

EXIT_OK, EXIT_USAGE, EXIT_ENGINE, EXIT_FAIL = 0, 1, 2, 3

# small named patterns, usable wherever a pattern file is expected
BUILTIN_PATTERNS = {
    "empty": "0 0\n",
    "one-zero": "1 1\n0\n",
    "diag2": "2 2\n0.\n.0\n",
    "first-bad": "3 3\n.00\n0..\n0..\n",
    "problem-case": "3 3\n000\n0..\n0..\n",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------
# input helpers


def load_case(source: str, special_args=()) -> tuple[ZeroPattern, dict, int | None]:
    """Read a pattern from a builtin name, a pattern text file or a JSON case file.

    Returns (pattern, specials as cell -> stage expressions, k from the file or None).
    """
    if source in BUILTIN_PATTERNS and not os.path.exists(source):
        text = BUILTIN_PATTERNS[source]
    else:
        try:
            with open(source) as fh:
                text = fh.read()
        except OSError as e:
            raise UsageError(f"cannot read pattern {source!r}: {e.strerror}") from e
    if text.lstrip().startswith("{"):
        return _case_from_json(text)
    try:
        Z, labels = parse_pattern_text(text)
    except ValueError as e:
        raise UsageError(str(e)) from e
    stages = {}
    for item in special_args:
        lab, sep, exprs = item.partition("=")
        if not sep or not lab.strip():
            raise UsageError(f"--special expects LABEL=expr[,expr...], got {item!r}")
        stages[lab.strip()] = [s.strip() for s in exprs.split(",") if s.strip()]
    specials = {}
    for cell, lab in labels.items():
        if lab not in stages:
            raise UsageError(f"no --special given for label {lab}")
        specials[cell] = [_parse(s) for s in stages[lab]]
    return Z, specials, None


def _case_from_json(text: str):
    try:
        obj = json.loads(text)
        zeros = [(int(r) - 1, int(c) - 1) for r, c in obj.get("zeros", [])]
        rows = int(obj.get("rows", max((r + 1 for r, _ in zeros), default=0)))
        cols = int(obj.get("cols", max((c + 1 for _, c in zeros), default=0)))
        specials = {}
        for sp in obj.get("specials", []):
            r, c = sp["cell"]
            specials[(int(r) - 1, int(c) - 1)] = [_parse(s) for s in sp["stages"]]
        k = obj.get("k")
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"bad case JSON: {e}") from e
    if any(not (0 <= r < rows and 0 <= c < cols) for r, c in zeros):
        raise UsageError("zero outside the declared window")
    return ZeroPattern(rows, cols, frozenset(zeros)), specials, (int(k) if k is not None else None)


def _parse(s: str):
    try:
        return parse_expr(s)
    except ExprSyntaxError as e:
        raise UsageError(f"bad expression {s!r}: {e}") from e


def _parse_cases(spec: str, ids: list[int]) -> list[int]:
    if spec == "all":
        return ids
    out = []
    for part in spec.split(","):
        part = part.strip()
        try:
            if "-" in part:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            elif part:
                out.append(int(part))
        except ValueError as e:
            raise UsageError(f"bad case list {spec!r}") from e
    unknown = sorted(set(out) - set(ids))
    if unknown:
        raise UsageError(f"unknown case ids {unknown}")
    return out


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# ----------------------------------------------------------------------
# compute


def cmd_compute(args) -> int:
    from .conjecture import report
    from .engine import Engine, EngineError, compute_F

    Z, specials, k_file = load_case(args.pattern, args.special or ())
    k = args.k if args.k is not None else k_file
    if k is None:
        raise UsageError("--k is required unless the case file sets k")
    if k < 1:
        raise UsageError("k must be positive")
    if args.depth_limit < 1:
        raise UsageError("--depth-limit must be positive")
    eng = Engine(depth_limit=args.depth_limit, record_tree=bool(args.tree))
    try:
        F = compute_F(Z, k, specials, engine=eng, strategy=args.strategy)
    except EngineError as e:
        print(f"engine error: {e}", file=sys.stderr)
        return EXIT_ENGINE
    rep = report(Z, k, F, "exact")
    if args.tree:
        with open(args.tree, "w") as fh:
            json.dump(eng.export_tree(), fh, indent=1, sort_keys=True)
    if args.json:
        print(json.dumps(rep, indent=2))
        return EXIT_OK
    print(f"F = {F}")
    if rep["b"] is not None:
        print("b-triangle:")
        for row in rep["b"]:
            print("  " + " ".join(row))
        for r in rep["residual"]:
            print(f"residual: {r}")
    else:
        print("no b-triangle form (pole of higher order in m)")
    return EXIT_OK


# ----------------------------------------------------------------------
# verify


def _verify_cs(args) -> list[tuple[str, bool]]:
    from .conjecture import cs_formula
    from .engine import F_empty

    if args.k < 1 or (args.k > 5 and not (args.allow_long and args.k == 6)):
        raise UsageError("cs needs 1 <= k <= 5 (k = 6 with --allow-long)")
    return [(f"cs k={args.k}", F_empty(args.k, allow_long=args.allow_long) == cs_formula(args.k))]


def _verify_parisi(args) -> list[tuple[str, bool]]:
    from .conjecture import cs_formula, parisi_value
    from .engine import F_empty, square_reduce

    n = args.n
    if not 1 <= n <= 5:
        raise UsageError("parisi needs 1 <= n <= 5")
    target = parisi_value(n)
    items = [
        (f"parisi n={n} engine", eval_at(F_empty(n), n, n) == target),
        (f"parisi n={n} formula", eval_at(cs_formula(n), n, n) == target),
    ]
    if 2 <= n <= 4:
        items.append((f"parisi n={n} square_reduce", square_reduce(n) == target))
    return items


def _appendix_worker(ids: list[int]) -> list[tuple[int, bool, str]]:
    from .corpus import load_appendix
    from .engine import Engine, EngineError, compute_F

    cases = {c.id: c for c in load_appendix()}
    eng = Engine()
    out = []
    for i in ids:
        c = cases[i]
        Z, sp = c.pattern()
        try:
            ok = compute_F(Z, c.k, sp, engine=eng) == c.expected_F()
            msg = ""
        except EngineError as e:
            ok, msg = False, str(e)
        out.append((i, ok, msg))
    if eng.stats.probability_failures:
        out.append((-1, False, f"{eng.stats.probability_failures} race nodes with probabilities not summing to 1"))
    return out


def _verify_appendix(args) -> list[tuple[str, bool]]:
    from .corpus import load_appendix
    from .montecarlo import resolve_workers

    ids = _parse_cases(args.cases, [c.id for c in load_appendix()])
    workers = min(resolve_workers(args.workers), max(1, len(ids)))
    if workers > 1:
        # contiguous chunks keep related cases together so memo reuse survives
        size = math.ceil(len(ids) / workers)
        chunks = [ids[i : i + size] for i in range(0, len(ids), size)]
        with get_context().Pool(len(chunks)) as pool:
            parts = pool.map(_appendix_worker, chunks)
        results = [r for p in parts for r in p]
    else:
        results = _appendix_worker(ids)
    items = []
    for i, ok, msg in sorted(results):
        name = f"case {i}" if i >= 0 else "race probabilities"
        items.append((name + (f" ({msg})" if msg else ""), ok))
    return items


def _verify_diagonal(args) -> list[tuple[str, bool]]:
    from .conjecture import diagonal_F
    from .engine import compute_F

    k = args.k
    if not 1 <= k <= 6:
        raise UsageError("diagonal needs 1 <= k <= 6")
    F = diagonal_F(k)
    H = sum(Fraction(1, i) for i in range(1, k + 1))
    sym = sum((1 / (parse_expr("n") - j) for j in range(k)), parse_expr("0")) / k
    items = [
        (f"diagonal k={k} at (k,k)", eval_at(F, k, k) == H / k),
        (f"diagonal k={k} at (k,n)", F.subs(m0=k) == sym),
    ]
    if k <= 5:
        Z = ZeroPattern.of([(i, i) for i in range(1, k)], k - 1, k - 1)
        items.append((f"diagonal k={k} engine", compute_F(Z, k) == F))
    return items


def _verify_mobius(args) -> list[tuple[str, bool]]:
    from .conjecture import main_conjecture_F, mobius_F

    Z, specials, k_file = load_case(args.pattern)
    if specials:
        raise UsageError("mobius takes a pattern without special entries")
    k = args.k if args.k is not None else k_file
    if k is None or k < 1:
        raise UsageError("mobius needs a positive --k")
    m0, n0 = args.dims
    try:
        lhs = mobius_F(Z, k, m0, n0)
    except (BoundsError, ValueError) as e:
        raise UsageError(str(e)) from e
    rhs = eval_at(main_conjecture_F(Z, k), m0, n0)
    print(f"mobius = {lhs}, probability form = {rhs}")
    return [(f"mobius k={k} at ({m0},{n0})", lhs == rhs)]


VERIFIERS = {
    "cs": _verify_cs,
    "parisi": _verify_parisi,
    "appendix": _verify_appendix,
    "diagonal": _verify_diagonal,
    "mobius": _verify_mobius,
}


def cmd_verify(args) -> int:
    from .engine import EngineError

    try:
        items = VERIFIERS[args.target](args)
    except EngineError as e:
        print(f"engine error: {e}", file=sys.stderr)
        return EXIT_ENGINE
    for name, ok in items:
        print(f"{_status(ok)} {name}")
    passed = sum(ok for _, ok in items)
    print(f"{passed}/{len(items)} passed")
    return EXIT_OK if passed == len(items) else EXIT_FAIL


# ----------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    from .montecarlo import SampleConfig, estimate_F, estimate_use_probability

    if args.samples < 1:
        raise UsageError("--samples must be positive")
    if args.pattern:
        Z, specials, _ = load_case(args.pattern)
        if specials:
            raise UsageError("simulate takes a pattern without special entries")
    else:
        Z = ZeroPattern.empty()
    try:
        cfg = SampleConfig(args.m, args.n, args.k, Z, args.samples, args.seed, args.workers)
    except ValueError as e:
        raise UsageError(str(e)) from e
    out = {}
    if args.cell is None:
        est = estimate_F(cfg)
        target = _target_F(Z, args.k, args.m, args.n)
    else:
        cell = (args.cell[0] - 1, args.cell[1] - 1)
        try:
            est = estimate_use_probability(cfg, cell)
        except ValueError as e:
            raise UsageError(str(e)) from e
        target = _target_use(Z, cell, args.k, args.m, args.n)
        if Z.zeros:
            out["caveat"] = "zeros allow tied optima; the solver's deterministic choice is counted"
    out = {
        "mean": est.mean,
        "stderr": est.stderr,
        "samples": est.samples,
        "target": None if target is None else str(target),
        "z": None if target is None else est.z(float(target)),
        **out,
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _target_F(Z: ZeroPattern, k: int, m0: int, n0: int):
    from .engine import EngineError, compute_F

    try:
        return eval_at(compute_F(Z, k), m0, n0)
    except (EngineError, ArithmeticError, BoundsError):
        return None


def _target_use(Z: ZeroPattern, cell, k: int, m0: int, n0: int):
    from .conjecture import olin_probability, zero_use_probability
    from .engine import EngineError

    if cell in Z.zeros:
        # a lone zero is used exactly when its row minimum would be
        if len(Z.zeros) == 1 and k <= min(m0, n0):
            return eval_at(olin_probability(k), m0, n0)
        return None
    try:
        return eval_at(zero_use_probability(Z, cell, k, via="engine"), m0, n0)
    except (EngineError, ArithmeticError, BoundsError):
        return None


# ----------------------------------------------------------------------
# asymptotics


def cmd_asymptotics(args) -> int:
    from .asymptotics import QUARTER, closed_form_limit, convergence_table, limit_integral, pnorm, table_csv

    if args.region == "quarter":
        region = QUARTER
    else:
        if args.p is None:
            raise UsageError("--region pnorm needs --p")
        if not args.p > 1:
            raise UsageError("p must exceed 1")
        region = pnorm(args.p)
    if args.tol < 1e-10:
        raise UsageError("--tol must be at least 1e-10")
    val = limit_integral(region, args.tol)
    lim = closed_form_limit(region.exponent)
    print(f"integral    {val:.12f}")
    print(f"closed form {lim:.12f}")
    print(f"difference  {abs(val - lim):.3e}")
    if args.table:
        try:
            ns = [int(x) for x in args.table.split(",") if x.strip()]
        except ValueError as e:
            raise UsageError(f"bad --table {args.table!r}") from e
        if any(not 1 <= n <= 40 for n in ns):
            raise UsageError("table sizes must lie in 1..40")
        sys.stdout.write(table_csv(convergence_table(region, ns, args.subset_samples, args.seed)))
    return EXIT_OK


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="assign-lab", description="Exact and simulated costs of random k-assignments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compute", help="exact F for a pattern")
    c.add_argument("--k", type=int)
    c.add_argument("--pattern", required=True, help="pattern text file, JSON case file or builtin name")
    c.add_argument("--special", action="append", metavar="LABEL=EXPR[,EXPR]", help="stage rates of a labeled entry")
    c.add_argument("--strategy", choices=["recurse", "alt"], default="recurse")
    c.add_argument("--depth-limit", type=int, default=64)
    c.add_argument("--json", action="store_true")
    c.add_argument("--tree", metavar="FILE", help="write the case tree as JSON")
    c.set_defaults(func=cmd_compute)

    v = sub.add_parser("verify", help="exact identity checks")
    vs = v.add_subparsers(dest="target", required=True, parser_class=_Parser)
    x = vs.add_parser("cs")
    x.add_argument("--k", type=int, required=True)
    x.add_argument("--allow-long", action="store_true")
    x = vs.add_parser("parisi")
    x.add_argument("--n", type=int, required=True)
    x = vs.add_parser("appendix")
    x.add_argument("--cases", default="all", help="comma list, ranges a-b, or 'all'")
    x.add_argument("--workers", type=int, default=1)
    x = vs.add_parser("diagonal")
    x.add_argument("--k", type=int, required=True)
    x = vs.add_parser("mobius")
    x.add_argument("--pattern", required=True)
    x.add_argument("--k", type=int)
    x.add_argument("--dims", type=int, nargs=2, metavar=("M", "N"), required=True)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="Monte Carlo estimate")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--pattern")
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--cell", type=int, nargs=2, metavar=("R", "C"), help="1-based cell whose usage is estimated")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("asymptotics", help="large-n limit integrals")
    a.add_argument("--region", choices=["quarter", "pnorm"], default="quarter")
    a.add_argument("--p", type=float)
    a.add_argument("--tol", type=float, default=1e-6)
    a.add_argument("--table", metavar="N1,N2,...")
    a.add_argument("--subset-samples", type=int, default=200)
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_asymptotics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"assign-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
