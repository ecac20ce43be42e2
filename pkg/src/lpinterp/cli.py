"""Command line front end.

Exit codes: 0 success, 2 certified failure, 3 undecided (or hypothesis not
certified), 64 usage error, 65 malformed input.  Machine output goes to
``--out`` (or standard output when omitted); a short summary goes to
standard output (standard error when the data itself is on stdout).
The thread count for grid evaluations is read from LPINTERP_THREADS.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import counterexample as cx
from . import decomposer as dc
from . import functionals as fn
from .opnorms import OperatorMatrix, norm_report, reports_to_csv
from .seqcore import CoupleParams, Seq, Status, parse_exponent, seq_dumps

EXIT_OK, EXIT_FAIL, EXIT_UNDECIDED, EXIT_USAGE, EXIT_DATA = 0, 2, 3, 64, 65

_EXIT = {Status.PASS: EXIT_OK, Status.FAIL: EXIT_FAIL,
         Status.UNDECIDED: EXIT_UNDECIDED, Status.REFUSED: EXIT_UNDECIDED}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LPINTERP_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(f, items) -> list:
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [f(t) for t in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(f, items))  # map preserves input order


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _load_seq(path: str) -> Seq:
    obj = _load_json(path)
    try:
        if isinstance(obj, list):
            return Seq(obj)
        return Seq.from_json(obj)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_matrix(path: str) -> OperatorMatrix:
    obj = _load_json(path)
    try:
        if isinstance(obj, list):
            return OperatorMatrix(np.asarray(obj, float))
        return OperatorMatrix.from_json(obj)
    except (ValueError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _couple(text: str) -> CoupleParams:
    try:
        return CoupleParams.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _exponent(text: str) -> float:
    try:
        return parse_exponent(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _emit(args, payload: str, summary: str):
    if args.out:
        Path(args.out).write_text(payload)
        print(summary)
    else:
        sys.stdout.write(payload)
        print(summary, file=sys.stderr)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _verdict_json(v) -> dict:
    def clean(o):
        if isinstance(o, dict):
            return {str(k): clean(w) for k, w in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(w) for w in o]
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (float, np.floating)):
            o = float(o)
            return o if math.isfinite(o) else str(o)
        if isinstance(o, Status):
            return o.value
        if isinstance(o, (str, int, bool)) or o is None:
            return o
        return str(o)
    return {"status": v.status.value, "margin": clean(v.margin), "witness": clean(v.witness),
            "detail": clean(v.detail)}


def _summary_line(name: str, status: Status, witness=None) -> str:
    line = f"{name}: {status.value}"
    if status is Status.FAIL and witness is not None:
        line += f" (witness: {witness})"
    return line


# ---------------------------------------------------------------------------
# subcommands


def cmd_kfun(args) -> int:
    x = _load_seq(args.seq)
    couple = _couple(args.couple)
    grid = fn.parse_grid(args.grid, couple)
    method = args.method
    if method == "auto":
        method = "from-E" if couple.p == 0 else "exact-oracle"
    if method == "from-E":
        one = lambda t: fn.k_from_e(x, float(t), couple.q)  # noqa: E731
    elif method == "holmstedt":
        one = lambda t: fn.holmstedt(x, float(t), couple)  # noqa: E731
    else:
        one = lambda t: fn.CertifiedValue.exact(  # noqa: E731
            fn.k_exact_oracle(x, float(t), couple, gap=False).value)
    vals = _pmap(one, grid)
    curve = fn.KCurve(np.asarray(grid, float), np.array([v.mid for v in vals]), method,
                      np.array([float(v.lo) for v in vals]), np.array([float(v.hi) for v in vals]))
    inv = curve.check_invariants()
    _emit(args, curve.to_csv(), f"kfun: {len(grid)} points, method {method}, invariants {inv}")
    return EXIT_OK


def cmd_efun(args) -> int:
    x = _load_seq(args.seq)
    couple = _couple(args.couple)
    if couple.p != 0:
        raise UsageError("efun needs a couple with p = 0")
    grid = [float(t) for t in args.grid.split(",")] if "," in args.grid or args.grid[0].isdigit() \
        else list(fn.parse_grid(args.grid, couple))
    vals = _pmap(lambda t: fn.e_functional(x, t, couple), grid)
    lines = ["t,E,lo,hi"] + [f"{t!r},{v.mid!r},{float(v.lo)!r},{float(v.hi)!r}" for t, v in zip(grid, vals)]
    _emit(args, "\n".join(lines) + "\n", f"efun: {len(grid)} points")
    return EXIT_OK


def cmd_holmstedt(args) -> int:
    x = _load_seq(args.seq)
    couple = _couple(args.couple)
    if couple.p == 0:
        raise UsageError("holmstedt needs p > 0")
    grid = fn.parse_grid(args.grid, couple)
    vals = _pmap(lambda t: fn.holmstedt(x, float(t), couple), grid)
    curve = fn.KCurve(np.asarray(grid, float), np.array([v.mid for v in vals]), "holmstedt",
                      np.array([float(v.lo) for v in vals]), np.array([float(v.hi) for v in vals]))
    _emit(args, curve.to_csv(), f"holmstedt: {len(grid)} points")
    return EXIT_OK


def cmd_majorize(args) -> int:
    x, y = _load_seq(args.x), _load_seq(args.y)
    couple = _couple(args.couple)
    if args.mode == "head":
        v = dc.head_majorizes(x, y, couple.p, args.horizon)
    elif args.mode == "tail":
        v = dc.tail_majorizes_shifted(x, y, couple.q, args.C, args.horizon)
    elif args.mode == "holmstedt":
        v = dc.holmstedt_majorizes(x, y, couple, args.horizon)
    elif args.mode == "e":
        v = fn.e_dominated(x, y, couple.q, args.horizon)
    else:
        grid = fn.parse_grid(args.grid, couple)
        if args.mode == "impl1":
            v = fn.check_impl1(x, y, couple.q, grid, args.horizon)
        else:
            v = fn.check_impl2(x, y, args.C, couple.q, grid, args.horizon)
    _emit(args, _dumps(_verdict_json(v)), _summary_line(f"majorize[{args.mode}]", v.status, v.witness))
    return _EXIT[v.status]


def cmd_partition(args) -> int:
    x, y = _load_seq(args.x), _load_seq(args.y)
    couple = _couple(args.couple)
    try:
        part = dc.ab_partition(x, y, couple, args.horizon)
    except dc.CoverageError as exc:
        _emit(args, _dumps({"status": "fail", "uncovered_index": exc.index}),
              _summary_line("partition", Status.FAIL, exc.index))
        return EXIT_FAIL
    certs = dc.block_certificates(x, y, part, couple)
    ok = all(c.valid for c in certs)
    obj = part.to_json()
    obj["certificates"] = [{"block": list(c.block), "kind": c.kind, "margin": c.margin} for c in certs]
    obj["status"] = "pass" if ok else "fail"
    if args.csv:
        Path(args.csv).write_text(dc.certificates_to_csv(certs))
    st = Status.PASS if ok else Status.FAIL
    bad = next((c.block for c in certs if not c.valid), None)
    _emit(args, _dumps(obj), _summary_line("partition", st, bad) +
          f", {len(part.a_blocks)} A-blocks, {len(part.b_blocks)} B-blocks")
    return _EXIT[st]


def cmd_split(args) -> int:
    x, y = _load_seq(args.x), _load_seq(args.y)
    couple = _couple(args.couple)
    try:
        res = dc.split_operator(x, y, couple, args.horizon)
    except dc.CoverageError as exc:
        _emit(args, _dumps({"status": "fail", "uncovered_index": exc.index}),
              _summary_line("split", Status.FAIL, exc.index))
        return EXIT_FAIL
    except dc.TransferError as exc:
        _emit(args, _dumps({"status": "fail", "reason": str(exc)}), f"split: fail ({exc})")
        return EXIT_FAIL
    ok = res.residual <= 1e-10
    obj = {"T": res.T.to_json(), "S": res.S.to_json(), "residual": res.residual,
           "norms": res.norms, "partition": res.partition.to_json(),
           "status": "pass" if ok else "fail"}
    flags = ", ".join(res.exceedances) or "none"
    _emit(args, _dumps(obj), f"split: {'pass' if ok else 'fail'}, residual {res.residual:.3e}, "
                             f"T {res.norms['T_couple']:.4g}, S {res.norms['S_couple']:.4g}, exceedances: {flags}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_norms(args) -> int:
    M = _load_matrix(args.matrix)
    exps = [parse_exponent(e) for e in args.exponents.split(",")]
    reports = [norm_report(M, e) for e in exps]
    _emit(args, reports_to_csv(reports), "norms: " + ", ".join(
        f"{r.space}={'%.6g' % r.hi if r.exact else '[%.6g, %.6g]' % (r.lo, r.hi)}" for r in reports))
    return EXIT_OK


def cmd_tab(args) -> int:
    h = _load_seq(args.seq)
    if args.lemma:
        if args.p is None or args.r is None:
            raise UsageError("--lemma needs --p and --r")
        rep = cx.lemma_tab_verify(h, args.a, args.p, args.q, args.r)
        obj = {"items": {k: _verdict_json(v) for k, v in rep.items.items()},
               "min_passing_b": {repr(k): v for k, v in rep.min_passing_b.items()},
               "thresholds": {repr(k): v for k, v in rep.thresholds.items()},
               "notices": rep.notices, "status": rep.status.value}
        _emit(args, _dumps(obj), f"tab lemma suite: {rep.status.value}")
        return _EXIT[rep.status]
    if args.b is None:
        raise UsageError("tab needs --b (or --lemma)")
    out = cx.t_ab(h, cx.TabParams(args.a, args.b, args.q))
    if isinstance(out, Seq):
        payload = seq_dumps(out) + "\n"
    else:
        payload = _dumps(cx.stretched_to_json(out))
    _emit(args, payload, f"tab: T_{{{args.a},{args.b}}} applied")
    return EXIT_OK


def cmd_counterexample(args) -> int:
    sigma = args.sigma if args.sigma is not None else cx.default_sigma(args.p, args.q)
    g = Seq.power(1.0, sigma)
    try:
        f, trace = cx.gen_counterexample(g, args.p, args.q, args.r, args.steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep = cx.verify_counterexample(f, g, args.p, args.q, args.r, trace)
    if args.csv:
        Path(args.csv).write_text(trace.ratio_csv())
    elif args.out:
        Path(args.out).with_suffix(".csv").write_text(trace.ratio_csv())
    parts = [f"{k}={v.status.value}" for k, v in sorted(rep.verdicts.items())]
    least = "n/a" if rep.least_ratio is None else f"{rep.least_ratio:.4g}"
    _emit(args, trace.dumps() + "\n",
          f"counterexample [{trace.regime}] {args.steps} steps: {rep.status.value}; least ratio {least}; "
          + ", ".join(parts))
    return _EXIT[rep.status]


def cmd_witness(args) -> int:
    w = cx.cm_witness(args.p, args.q, args.C, seed=args.seed)
    norms = []
    status = w.hypothesis.status
    for S in cx.null_space_operators(w.x, w.y, args.samples, seed=args.seed):
        v = cx.cm_witness_verify(w.x, w.y, w.N, args.q, S, args.p, w.c_hat)
        norms.append(v.detail.get("norm"))
        if v.status is not Status.PASS and status is Status.PASS:
            status = v.status
    obj = {"N": w.N, "bound": w.bound, "c_hat": w.c_hat, "x": w.x.to_json(), "y": w.y.to_json(),
           "hypothesis": _verdict_json(w.hypothesis), "samples": len(norms),
           "min_sample_norm": min(norms) if norms else None, "status": status.value}
    _emit(args, _dumps(obj), f"witness: N = {w.N}, bound = {w.bound:.6g}, {status.value}")
    return _EXIT[status]


def cmd_sqcheck(args) -> int:
    x, y = _load_seq(args.x), _load_seq(args.y)
    if not (x.is_finite and y.is_finite):
        raise InputError("sqcheck needs finite sequences")
    res = dc.sq_check(x.prefix, y.prefix, args.q, args.r, replay=not args.no_replay)
    obj = {"equal_mass": _verdict_json(res.equal_mass),
           "head_domination": _verdict_json(res.head_domination),
           "lsz_tail": _verdict_json(res.lsz_tail), "status": res.status.value}
    if res.replay is not None:
        obj["replay"] = {k: (_verdict_json(v) if hasattr(v, "status") else v)
                         for k, v in res.replay.items()}
        obj["u"] = None if res.u is None else [float(v) for v in res.u]
        obj["z"] = None if res.z is None else [float(v) for v in res.z]
    _emit(args, _dumps(obj), _summary_line("sqcheck", res.status, res.head_domination.witness))
    return _EXIT[res.status]


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lpinterp", description="K-functionals, orbits and counterexamples for (l^p, l^q).")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized steps")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="output file (default: standard output)")
        return sp

    sp = add("kfun", cmd_kfun, "K-functional on a grid (CSV)")
    sp.add_argument("--seq", required=True)
    sp.add_argument("--couple", required=True, help="p,q (q may be inf)")
    sp.add_argument("--grid", default="default")
    sp.add_argument("--method", default="auto", choices=["auto", "from-E", "exact-oracle", "holmstedt"])

    sp = add("efun", cmd_efun, "E-functional for (l^0, l^q) (CSV)")
    sp.add_argument("--seq", required=True)
    sp.add_argument("--couple", required=True)
    sp.add_argument("--grid", default="0,1,2,3,4,5,6,7,8")

    sp = add("holmstedt", cmd_holmstedt, "Holmstedt expression on a grid (CSV)")
    sp.add_argument("--seq", required=True)
    sp.add_argument("--couple", required=True)
    sp.add_argument("--grid", default="default")

    sp = add("majorize", cmd_majorize, "majorization and E/K implication checks")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--couple", required=True)
    sp.add_argument("--mode", default="holmstedt",
                    choices=["head", "tail", "holmstedt", "e", "impl1", "impl2"])
    sp.add_argument("--C", type=float, default=1.0)
    sp.add_argument("--grid", default="default")
    sp.add_argument("--horizon", type=int)

    for name, func, help_ in (("partition", cmd_partition, "A/B interval partition with certificates"),
                              ("split", cmd_split, "operators T, S with y = Tx + Sx")):
        sp = add(name, func, help_)
        sp.add_argument("--x", required=True)
        sp.add_argument("--y", required=True)
        sp.add_argument("--couple", required=True)
        sp.add_argument("--horizon", type=int)
        if name == "partition":
            sp.add_argument("--csv", help="block certificate CSV")

    sp = add("norms", cmd_norms, "induced norms of a matrix (CSV)")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--exponents", default="0,0.5,1,2,inf")

    sp = add("tab", cmd_tab, "apply T_{a,b} or run its property suite")
    sp.add_argument("--seq", required=True)
    sp.add_argument("--a", type=int, required=True)
    sp.add_argument("--b", type=int)
    sp.add_argument("--q", type=_exponent, required=True)
    sp.add_argument("--lemma", action="store_true")
    sp.add_argument("--p", type=_exponent, help="needed with --lemma")
    sp.add_argument("--r", type=_exponent, help="needed with --lemma")

    sp = add("counterexample", cmd_counterexample, "tail-flattening construction (trace JSON + ratio CSV)")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--q", type=_exponent, required=True)
    sp.add_argument("--r", type=_exponent, required=True)
    sp.add_argument("--steps", type=int, default=20)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--csv", help="ratio CSV (default: next to --out)")

    sp = add("witness", cmd_witness, "uniform CM failure witness")
    sp.add_argument("--p", type=_exponent, required=True)
    sp.add_argument("--q", type=_exponent, required=True)
    sp.add_argument("--C", type=float, required=True)
    sp.add_argument("--samples", type=int, default=100)

    sp = add("sqcheck", cmd_sqcheck, "S_q conditions with proof replay")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--q", type=_exponent, required=True)
    sp.add_argument("--r", type=_exponent, required=True)
    sp.add_argument("--no-replay", action="store_true")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("missing subcommand")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:  # parameter outside a routine's domain
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())
