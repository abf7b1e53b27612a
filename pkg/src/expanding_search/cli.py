"""Command-line front end and benchmark harness.

Exit codes::

    0  success
    1  unexpected internal error
    2  usage error (bad or unknown flags)
    3  input file missing or unreadable
    4  malformed or invalid instance
    5  request cannot be carried out (e.g. oracle on a too-large instance)
    6  verification found a violated invariant
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
import warnings
from collections import defaultdict
from pathlib import Path

from .bnc import CUT_CONFIGS, branch_and_cut, lp_lower_bound
from .graph import InstanceError, InvalidSearchError, search_cost, validate_search
from .greedy import greedy_search, greedy_upper_bound
from .instance_io import (
    FAMILIES,
    GeneratorSpec,
    dumps_solution,
    generate,
    read_instance,
    write_instance,
)
from .localsearch import greedy_local_search
from .oracle import DP_CAP, TooLargeError, optimal_search_dp

log = logging.getLogger("expanding_search")

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_IO, EXIT_INSTANCE, EXIT_INFEASIBLE, EXIT_VERIFY = range(7)
METHODS = ("exact", "greedy", "local", "oracle")
CSV_COLUMNS = ["instance", "method", "cost", "lower_bound", "gap", "nodes", "cuts_c1", "cuts_c2", "wall_ms", "n", "density"]


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "usage", message)


def _load(path):
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_IO, "io", f"cannot read {path}")
    try:
        return read_instance(p)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror}") from None
    except InstanceError as exc:
        raise CliError(EXIT_INSTANCE, "instance", f"{path}: {exc}") from None


def _instance_files(directory):
    d = Path(directory)
    if not d.is_dir():
        raise CliError(EXIT_IO, "io", f"not a directory: {directory}")
    files = sorted(d.glob("*.txt"))
    if not files:
        raise CliError(EXIT_IO, "io", f"no *.txt instance files in {directory}")
    return files


def run_method(inst, method, time_limit=1200.0, epsilon=None, warm_start=True):
    """Run one solver; returns a result dict with the re-validated cost."""
    t0 = time.perf_counter()
    row = {"lower_bound": "", "gap": "", "nodes": "", "cuts_c1": "", "cuts_c2": ""}
    if method == "exact":
        rep = branch_and_cut(inst, time_limit=time_limit, warm_start=warm_start)
        seq = rep.sequence
        row.update(lower_bound=rep.lower_bound, gap=rep.gap, nodes=rep.nodes,
                   cuts_c1=rep.cuts.get("C1", 0), cuts_c2=rep.cuts.get("C2", 0), status=rep.status)
    elif method == "greedy":
        seq, trace = greedy_search(inst, epsilon)
        row["upper_bound"] = greedy_upper_bound(trace)
    elif method == "local":
        seq, _ = greedy_local_search(inst)
    elif method == "oracle":
        try:
            cost, seq = optimal_search_dp(inst)
        except TooLargeError as exc:
            raise CliError(EXIT_INFEASIBLE, "too-large", str(exc)) from None
        row.update(lower_bound=cost, gap=0.0)
    else:
        raise CliError(EXIT_USAGE, "usage", f"unknown method {method}")
    # never trust a solver's own number
    try:
        validate_search(inst, seq)
    except InvalidSearchError as exc:
        raise CliError(EXIT_INTERNAL, "internal", f"{method} produced an invalid search: {exc}") from None
    row["cost"] = search_cost(inst, seq)
    row["wall_ms"] = round(1000 * (time.perf_counter() - t0), 3)
    row["sequence"] = seq
    return row


def _density(inst):
    N = inst.N
    return len(inst.lengths) / (N * (N - 1) / 2) if N > 1 else 1.0


# -- subcommands ------------------------------------------------------------


def cmd_generate(args):
    out = Path(args.out)
    specs = [GeneratorSpec(args.family, args.n, args.density, args.weighted, args.seed + i) for i in range(args.count)]
    if args.count > 1 or out.is_dir() or str(args.out).endswith("/"):
        out.mkdir(parents=True, exist_ok=True)
        targets = [out / f"{s.name}.txt" for s in specs]
    else:
        targets = [out]
    for spec, path in zip(specs, targets):
        try:
            inst = generate(spec)
        except ValueError as exc:
            raise CliError(EXIT_INFEASIBLE, "infeasible", str(exc)) from None
        write_instance(inst, path)
        print(path)
    return EXIT_OK


def cmd_solve(args):
    inst = _load(args.instance)
    if args.method == "oracle" and inst.n > DP_CAP:
        raise CliError(EXIT_INFEASIBLE, "too-large", f"oracle is limited to {DP_CAP} non-root vertices, got {inst.n}")
    res = run_method(inst, args.method, args.time_limit, args.epsilon, args.warm_start == "on")
    print(f"{res['cost']:.12g}")
    if args.verbose:
        order = [inst.names[v] for v in res["sequence"].order]
        print("order " + " ".join(order))
        for k in ("lower_bound", "gap", "nodes", "cuts_c1", "cuts_c2", "status", "wall_ms"):
            if res.get(k, "") != "":
                print(f"{k} {res[k]}")
    if args.solution:
        Path(args.solution).write_text(dumps_solution(inst, res["sequence"], res["cost"], args.method))
    return EXIT_OK


def cmd_bounds(args):
    inst = _load(args.instance)
    print(f"{lp_lower_bound(inst, args.cuts):.12g}")
    return EXIT_OK


def cmd_bench(args):
    files = _instance_files(args.directory)
    methods = args.methods.split(",")
    for m in methods:
        if m not in METHODS and not (m.startswith("lp-") and m[3:] in CUT_CONFIGS):
            raise CliError(EXIT_USAGE, "usage", f"unknown bench method {m}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    sol_dir = out.parent / (out.stem + "_solutions")
    sol_dir.mkdir(exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for f in files:
            inst = _load(f)
            for m in methods:
                base = {"instance": f.stem, "method": m, "n": inst.n, "density": round(_density(inst), 6)}
                if m.startswith("lp-"):
                    t0 = time.perf_counter()
                    lb = lp_lower_bound(inst, m[3:])
                    row = {**base, "cost": "", "lower_bound": lb, "gap": "", "nodes": "", "cuts_c1": "",
                           "cuts_c2": "", "wall_ms": round(1000 * (time.perf_counter() - t0), 3)}
                else:
                    if m == "oracle" and inst.n > DP_CAP:
                        log.warning("skipping oracle on %s (n=%d)", f.name, inst.n)
                        continue
                    res = run_method(inst, m, args.time_limit)
                    row = {**base, **res}
                    (sol_dir / f"{f.stem}.{m}.sol").write_text(dumps_solution(inst, res["sequence"], res["cost"], m))
                writer.writerow(row)
                fh.flush()
                print(f"{f.stem} {m} {row['cost'] if row['cost'] != '' else row['lower_bound']}", file=sys.stderr)
    return EXIT_OK


def verify_instance(inst, time_limit=60.0) -> list[str]:
    """Check solver invariants on one instance; returns the violated ones."""
    bad = []
    tol = 1e-6
    seq_g, trace = greedy_search(inst)
    g = search_cost(inst, seq_g)
    if g > greedy_upper_bound(trace) + 1e-9:
        bad.append("greedy cost exceeds its price bound")
    _, ls = greedy_local_search(inst)
    if ls > g + 1e-9:
        bad.append("local search worse than greedy")
    rep = branch_and_cut(inst, time_limit=time_limit)
    if abs(search_cost(inst, rep.sequence) - rep.cost) > 1e-9 * max(1, rep.cost):
        bad.append("exact solver misreports its cost")
    if rep.lower_bound > rep.cost + 1e-9:
        bad.append("lower bound above incumbent")
    if rep.cost > ls + 1e-9:
        bad.append("exact solver worse than its warm start")
    opt = rep.cost if rep.status == "optimal" else None
    if inst.n <= 12:
        dp, _ = optimal_search_dp(inst)
        if opt is not None and abs(dp - opt) > tol * max(1, dp):
            bad.append(f"exact {opt} differs from oracle {dp}")
        opt = dp
    if opt is not None:
        if g > 8 * opt + tol:
            bad.append("greedy above 8x optimum")
        bounds = {c: lp_lower_bound(inst, c) for c in CUT_CONFIGS}
        for c, b in bounds.items():
            if b > opt * (1 + tol) + tol:
                bad.append(f"lp bound {c} above optimum")
            if b < bounds["none"] - tol * max(1, opt) or b > bounds["c1c2"] + tol * max(1, opt):
                bad.append(f"lp bound {c} out of order")
    return bad


def cmd_verify(args):
    files = _instance_files(args.directory)
    failures = 0
    for f in files:
        inst = _load(f)
        bad = verify_instance(inst, args.time_limit)
        print(f"{f.name}: {'ok' if not bad else 'FAIL ' + '; '.join(bad)}")
        failures += bool(bad)
    if failures:
        raise CliError(EXIT_VERIFY, "verify", f"{failures} of {len(files)} instances violate invariants")
    return EXIT_OK


def ratio_report(rows, out):
    """Mean bound/optimum and heuristic/optimum per (n, density) group.

    ``rows`` are dicts as written by ``bench``; ``out`` a writable text file.
    Returns the list of written records.
    """
    by_inst = defaultdict(dict)
    for r in rows:
        by_inst[r["instance"]][r["method"]] = r
    groups = defaultdict(lambda: defaultdict(list))
    for name, ms in by_inst.items():
        ref = ms.get("exact") if ms.get("exact", {}).get("gap") not in (None, "") and float(ms["exact"]["gap"]) == 0 else None
        ref = ref or ms.get("oracle")
        if ref is None:
            warnings.warn(f"no optimum for {name}; skipped", stacklevel=2)
            continue
        opt = float(ref["cost"])
        any_row = next(iter(ms.values()))
        key = (int(any_row["n"]), float(any_row["density"]))
        for m, r in ms.items():
            if m.startswith("lp-") and r["lower_bound"] != "":
                groups[key][m].append(float(r["lower_bound"]) / opt if opt > 0 else 1.0)
            elif m in ("greedy", "local") and r["cost"] != "":
                groups[key][m].append(float(r["cost"]) / opt if opt > 0 else 1.0)
    fields = ["n", "density", "instances"] + [f"lp-{c}" for c in CUT_CONFIGS] + ["greedy", "local"]
    writer = csv.DictWriter(out, fieldnames=fields)
    writer.writeheader()
    records = []
    for (n, dens), ratios in sorted(groups.items()):
        rec = {"n": n, "density": dens, "instances": max(len(v) for v in ratios.values())}
        for f in fields[3:]:
            vals = ratios.get(f)
            rec[f] = round(sum(vals) / len(vals), 6) if vals else ""
        writer.writerow(rec)
        records.append(rec)
    return records


def cmd_ratio(args):
    try:
        with open(args.results, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {args.results}: {exc.strerror}") from None
    if args.out:
        with open(args.out, "w", newline="") as fh:
            ratio_report(rows, fh)
    else:
        ratio_report(rows, sys.stdout)
    return EXIT_OK


def build_parser():
    ap = _Parser(prog="expanding-search", description="Expanding search solvers and benchmark tools")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write random instances")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--n", type=int, required=True, help="vertices including the root")
    g.add_argument("--density", type=float, default=1.0)
    g.add_argument("--weighted", action=argparse.BooleanOptionalAction, default=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--out", required=True, help="file, or directory when --count > 1")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one instance and print its cost")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS, default="exact")
    s.add_argument("--time-limit", type=float, default=1200.0)
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--warm-start", choices=("on", "off"), default="on")
    s.add_argument("--solution", help="write the search to this file")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bounds", help="root LP bound")
    b.add_argument("instance")
    b.add_argument("--cuts", choices=CUT_CONFIGS, default="c1c2")
    b.set_defaults(func=cmd_bounds)

    be = sub.add_parser("bench", help="run methods over a directory, write CSV")
    be.add_argument("directory")
    be.add_argument("--methods", default="exact,greedy,local,lp-none,lp-c1,lp-c2,lp-c1c2")
    be.add_argument("--time-limit", type=float, default=1200.0)
    be.add_argument("--out", default="results.csv")
    be.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="check solver invariants on a directory of instances")
    v.add_argument("directory")
    v.add_argument("--time-limit", type=float, default=60.0)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("ratio", help="bound and heuristic ratios per (n, density) group")
    r.add_argument("results")
    r.add_argument("--out")
    r.set_defaults(func=cmd_ratio)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc), "exit": exc.code}), file=sys.stderr)
        return exc.code
    except Exception as exc:  # pragma: no cover - last resort
        print(json.dumps({"error": "internal", "message": f"{type(exc).__name__}: {exc}", "exit": EXIT_INTERNAL}),
              file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
