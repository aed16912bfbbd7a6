"""Command-line interface: ``canheight VERB [flags]``.

Exit status: 0 for certified results, 2 when the answer is inconclusive or
unknown, 1 for usage and input errors.

Polynomial syntax (``--poly``): a sum of terms ``[sign][coeff][*]z[^k]`` with
rational coefficients ``p/q`` (``x`` may stand for ``z``, spaces ignored),
a JSON coefficient list low-to-high such as ``["1/2", 0, 1]``, or
``@file.json`` holding such a list.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .boettcher import NoRationalRoot, SemiconjugacyError, boettcher_series, verify_semiconjugacy
from .green import DEFAULT_BUDGET, DEFAULT_TOL, Status, green
from .heights import IndependenceKind, Verdict, canonical_height, hhat_status, independence_check
from .numeric import as_rational
from .polydyn import PolySyntaxError, classify_integrable, parse_poly
from .relations import (
    AuxInstance,
    AuxSystemTooLarge,
    aux_residual_decay,
    decay_csv,
    solve_aux,
    verify_annihilation,
)

OK, USAGE, INCONCLUSIVE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _poly(text: str):
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    return parse_poly(text)


def dumps(obj) -> str:
    """Canonical JSON: insertion order, compact separators, ASCII only."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def _emit(args, obj: dict, lines: list[str]) -> None:
    if args.json:
        print(dumps(obj))
    else:
        print("\n".join(lines))


def _common(p: argparse.ArgumentParser, point: bool = True) -> None:
    p.add_argument("--poly", required=True, help="polynomial (expression, JSON list, or @file.json)")
    if point:
        p.add_argument("--point", required=True, help="rational point a, e.g. 1/3")
    p.add_argument("--json", action="store_true", help="emit JSON")


def _tol(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", default=None, help="archimedean tolerance (default 2^-40)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="iteration budget")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="canheight", description="Canonical heights and Green functions for polynomials over Q.")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("green", help="local Green function at one place")
    _common(p)
    p.add_argument("--place", required=True, help='a prime or "inf"')
    _tol(p)

    p = sub.add_parser("height", help="canonical height decomposition")
    _common(p)
    _tol(p)

    p = sub.add_parser("status", help="algebraic/transcendental status of the multiplicative height")
    _common(p)
    _tol(p)

    p = sub.add_parser("classify", help="integrability of f")
    _common(p, point=False)

    p = sub.add_parser("boettcher", help="Böttcher coordinate series")
    _common(p, point=False)
    p.add_argument("--window", type=int, default=12)
    p.add_argument("--mode", choices=["exact", "interval"], default="exact")

    p = sub.add_parser("semiconj", help="check f o A = A o Q and the Böttcher ratio")
    _common(p, point=False)
    p.add_argument("--A", required=True, dest="A")
    p.add_argument("--Q", required=True, dest="Q")
    p.add_argument("--window", type=int, default=12)

    p = sub.add_parser("independence", help="multiplicative independence of non-archimedean parts")
    p.add_argument("--entry", action="append", required=True, metavar="POLY;POINT",
                   help="one (f, a) pair separated by ';' (repeat)")
    p.add_argument("--primes", required=True, help="comma-separated primes, one per entry")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("auxpoly", help="auxiliary polynomial construction")
    p.add_argument("--instance", help="instance JSON (or @file.json) with keys f, a, n, C, L")
    p.add_argument("--poly", action="append", help="polynomial f_i (repeat)")
    p.add_argument("--point", action="append", help="point a_i (repeat)")
    p.add_argument("--n", action="append", type=int, help="exponent n_i (repeat)")
    p.add_argument("--C", type=int, dest="C")
    p.add_argument("--L", type=int, dest="L")
    p.add_argument("--kmax", type=int, default=0, help="residual decay up to this k")
    p.add_argument("--bits", type=int, default=512)
    p.add_argument("--csv", help="write the decay table to this CSV file")
    p.add_argument("--json", action="store_true")
    return ap


# --------------------------------------------------------------------------
#  verbs
# --------------------------------------------------------------------------

def _tol_value(args):
    return as_rational(args.tol) if args.tol is not None else DEFAULT_TOL


def _cmd_green(args) -> int:
    f, a = _poly(args.poly), as_rational(args.point)
    r = green(f, a, args.place, tol=_tol_value(args), budget=args.budget)
    lines = [f"place     {r.place}", f"status    {r.status.value}"]
    if r.c is not None:
        lines.append(f"c         {r.to_json()['c']}   (g = c log {r.place})")
    if r.enclosure is not None:
        e = r.enclosure.to_json()
        lines.append(f"g in      [{e['lo']}, {e['hi']}]")
    if r.n0 is not None:
        lines.append(f"n0        {r.n0}")
    _emit(args, r.to_json(), lines)
    return OK if r.status is not Status.UNKNOWN else INCONCLUSIVE


def _cmd_height(args) -> int:
    f, a = _poly(args.poly), as_rational(args.point)
    dec = canonical_height(f, a, tol=_tol_value(args), budget=args.budget)
    j = dec.to_json()
    lines = ["place  contribution"]
    for p, c in j["nonarch"].items():
        lines.append(f"{p:<6} {c} * log {p}")
    lines.append(f"{'inf':<6} {dec.arch.status.value}")
    if dec.total is not None:
        lines.append(f"total  [{j['total']['lo']}, {j['total']['hi']}]")
    lines += [f"flag   {x}" for x in dec.flags]
    _emit(args, {"hhat": j}, lines)
    return OK if dec.complete else INCONCLUSIVE


def _cmd_status(args) -> int:
    f, a = _poly(args.poly), as_rational(args.point)
    st = hhat_status(f, a, tol=_tol_value(args), budget=args.budget)
    lines = [f"status  {st.verdict.value}"]
    if st.H0 is not None:
        lines.append(f"H0      {st.H0}")
    lines += [f"reason  {x}" for x in st.reasons]
    _emit(args, st.to_json(), lines)
    return OK if st.verdict is not Verdict.INCONCLUSIVE else INCONCLUSIVE


def _cmd_classify(args) -> int:
    v = classify_integrable(_poly(args.poly))
    _emit(args, v.to_json(), [v.label])
    return OK


def _cmd_boettcher(args) -> int:
    s = boettcher_series(_poly(args.poly), args.window, mode=args.mode)
    _emit(args, s.to_json(), [str(s)])
    return OK


def _cmd_semiconj(args) -> int:
    w = verify_semiconjugacy(_poly(args.poly), _poly(args.A), _poly(args.Q), args.window)
    lines = [f"delta   {w.delta}"]
    if w.ok:
        lines.append(f"zeta    {w.to_json()['zeta']}   (order {w.order})")
    else:
        lines.append(f"failed  {w.counterexample}")
    _emit(args, w.to_json(), lines)
    return OK if w.ok else INCONCLUSIVE


def _cmd_independence(args) -> int:
    entries = []
    for e in args.entry:
        if ";" not in e:
            raise UsageError(f"--entry expects 'POLY;POINT', got {e!r}")
        f, a = e.rsplit(";", 1)
        entries.append((_poly(f), as_rational(a)))
    primes = [int(x) for x in args.primes.split(",") if x.strip()]
    res = independence_check(entries, primes, budget=args.budget)
    lines = [f"result  {res.kind.value}"]
    if res.reason:
        lines.append(f"reason  {res.reason}")
    if res.matrix:
        j = res.to_json()
        lines.append("primes  " + " ".join(map(str, res.primes)))
        lines += ["        " + " ".join(row) for row in j["matrix"]]
        lines.append(f"rank    {res.rank}")
    if res.kind is IndependenceKind.INDEPENDENT:
        lines.append(f"hence   {res.to_json()['consequence']}")
    _emit(args, res.to_json(), lines)
    return OK if res.kind is IndependenceKind.INDEPENDENT else INCONCLUSIVE


def _cmd_auxpoly(args) -> int:
    if args.instance:
        text = args.instance
        if text.startswith("@"):
            text = Path(text[1:]).read_text()
        inst = AuxInstance.from_json(text)
    else:
        if not (args.poly and args.point and args.n):
            raise UsageError("auxpoly needs --instance or repeated --poly/--point/--n")
        inst = AuxInstance([_poly(x) for x in args.poly], args.point, args.n, args.C, args.L)
    try:
        system, P = solve_aux(inst)
    except AuxSystemTooLarge as exc:
        _emit(args, {"instance": inst.to_json(), "error": str(exc)}, [f"error   {exc}"])
        return INCONCLUSIVE
    check = verify_annihilation(P, inst)
    out = {
        "instance": inst.to_json(),
        "equations": system.shape[0],
        "unknowns": system.shape[1],
        "annihilated": check.passed,
        "P": P.to_json(),
    }
    lines = [f"equations {system.shape[0]}", f"unknowns  {system.shape[1]}",
             f"annihilation re-check {'passed' if check.passed else 'FAILED'}",
             f"nonzero coefficients of P: {len(P.coeffs)}"]
    if args.kmax:
        rows = aux_residual_decay(P, inst, args.kmax, bits=args.bits)
        out["decay"] = [{"k": r.k, "magnitude_upper": r.magnitude.to_json()["hi"], "heuristic": r.heuristic}
                        for r in rows]
        table = decay_csv(rows)
        lines.append(table.rstrip())
        if args.csv:
            Path(args.csv).write_text(table)
    _emit(args, out, lines)
    return OK if check.passed else INCONCLUSIVE


_VERBS = {
    "green": _cmd_green,
    "height": _cmd_height,
    "status": _cmd_status,
    "classify": _cmd_classify,
    "boettcher": _cmd_boettcher,
    "semiconj": _cmd_semiconj,
    "independence": _cmd_independence,
    "auxpoly": _cmd_auxpoly,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _VERBS[args.verb](args)
    except PolySyntaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except (UsageError, SemiconjugacyError, NoRationalRoot, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
