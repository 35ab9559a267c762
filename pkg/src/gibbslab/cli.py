"""Command-line front end.

Verdicts are printed to stdout as JSON with sorted keys (identical invocations
produce byte-identical output); sampled data goes to ``--out`` as CSV with
fixed columns, ``x,value`` for functions and ``t,R,L`` for overshoot curves.

Exit codes: 0 success, 2 rejected input or violated precondition, 1 internal
failure.  Function and pair specifiers are either builtin names (``haar``,
``bspline:m``, ``daubechies:k``) or paths to JSON files in the schemas the
library itself writes; a specifier naming an existing file is read as a file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from .catalog import (
    bank_names,
    resolve_bank,
    resolve_framelet,
    resolve_function,
    resolve_pair,
)
from .construct import build_dual, optimality_witness, verify_gibbs_free
from .errors import DimensionMismatchError, GibbsLabError, PreconditionError
from .framelet import (
    FilterBank,
    derive_wavelets,
    framelet_gibbs_verdict,
    oep_check,
    symbol_deviation_slope,
    truncated_expansion,
)
from .funcmodel import SampledFunction, bspline, function_from_json_dict
from .gibbs import (
    bracket_second_deriv,
    gibbs_at_point,
    identity_lhs,
    identity_rhs,
    overshoot,
    overshoot_curve,
)
from .quasiproj import (
    GridSpec,
    Monomial,
    QuasiProjectionPair,
    Sgn,
    accuracy_order,
    apply,
    check_qp1,
)

__all__ = ["main"]


def _jsonable(obj):
    """Recursively reduce numpy scalars/arrays so json.dumps accepts them."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _function_from_spec(spec: str, level: int):
    if os.path.exists(spec):
        return function_from_json_dict(_read_json(spec))
    return resolve_function(spec, level)


def _pair_from_args(args) -> QuasiProjectionPair:
    spec = getattr(args, "pair", None)
    if spec:
        if os.path.exists(spec):
            return QuasiProjectionPair.from_json_dict(_read_json(spec))
        return resolve_pair(spec, args.level)
    phi = getattr(args, "phi", None)
    phi_tilde = getattr(args, "phi_tilde", None)
    if phi and phi_tilde:
        return QuasiProjectionPair(
            _function_from_spec(phi, args.level), _function_from_spec(phi_tilde, args.level)
        )
    raise PreconditionError("a pair is required: pass --pair SPEC, or both --phi and --phi-tilde")


def _grid_from_args(args) -> GridSpec:
    if not 1 <= args.level <= 16:
        raise PreconditionError(f"grid level must satisfy 1 <= level <= 16, got {args.level}")
    lo = hi = None
    window = getattr(args, "window", None)
    if window:
        parts = window.split(",")
        if len(parts) != 2:
            raise PreconditionError(f"--window must be 'lo,hi', got {window!r}")
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError:
            raise PreconditionError(f"--window must hold two numbers, got {window!r}") from None
    return GridSpec(args.level, lo, hi)


def _rational_to_float(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise PreconditionError(f"expected an exact rational like 'p/q', got {text!r}") from None


def _signal_from_args(args):
    spec = args.f
    if spec == "sgn":
        return Sgn(_rational_to_float(args.x0))
    if spec == "gauss":
        return lambda x: np.exp(-np.asarray(x) ** 2)
    if spec.startswith("monomial:"):
        try:
            return Monomial(int(spec.split(":", 1)[1]))
        except ValueError:
            raise PreconditionError(f"malformed monomial degree in {spec!r}") from None
    raise PreconditionError(f"unknown signal {spec!r} (have sgn, gauss, monomial:j)")


def _write_function_csv(path: str, sf: SampledFunction) -> None:
    xs = sf.xs()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,value\n")
        for x, row in zip(xs, sf.values):
            fh.write(f"{float(x)!r},{float(row[0])!r}\n")


# -- command handlers ----------------------------------------------------------


def _cmd_analyze_pair(args) -> None:
    grid = _grid_from_args(args)
    pair = _pair_from_args(args)
    qp1 = check_qp1(pair)
    rhs = identity_rhs(pair)  # raises if the pair fails the basic conditions
    lhs = identity_lhs(pair, level=grid.level)
    br = bracket_second_deriv(pair)
    _emit(
        {
            "support_bound": pair.support_bound,
            "ncomponents": pair.ncomponents,
            "qp1": qp1,
            "identity_lhs": lhs,
            "identity_rhs": rhs,
            "identity_gap": abs(lhs - rhs),
            "bracket": br.value,
            "bracket_hypotheses_met": br.hypotheses_met,
            "accuracy_order": accuracy_order(pair),
            "symbol_slope": symbol_deviation_slope(pair),
        }
    )


def _cmd_gibbs_point(args) -> None:
    grid = _grid_from_args(args)
    pair = _pair_from_args(args)
    tol = 1e-3 if args.tol is None else args.tol
    report = gibbs_at_point(pair, args.x0, tol=tol, grid=grid)
    _emit(report.to_json_dict())


def _cmd_construct_dual(args) -> None:
    if not 1 <= args.level <= 16:
        raise PreconditionError(f"grid level must satisfy 1 <= level <= 16, got {args.level}")
    phi = _function_from_spec(args.phi, args.level)
    knot_rule = None
    if args.knots:
        try:
            vals = np.array([float(v) for v in args.knots.split(",")])
        except ValueError:
            raise PreconditionError(f"--knots must be comma-separated numbers") from None
        knot_rule = lambda N, m: vals
    construction = build_dual(phi, args.order, knot_rule=knot_rule)
    out = construction.to_json_dict()
    out["verification"] = verify_gibbs_free(construction, phi)
    out["witness"] = optimality_witness(construction)
    _emit(out)


def _cmd_check_oep(args) -> None:
    spec = args.bank
    if os.path.exists(spec):
        bank = FilterBank.from_json_dict(_read_json(spec))
    else:
        bank = resolve_bank(spec)
    tol = 1e-12 if args.tol is None else args.tol
    _emit(oep_check(bank, tol=tol))


def _framelet_from_args(args):
    spec = args.bank
    if os.path.exists(spec):
        bank = FilterBank.from_json_dict(_read_json(spec))
        if not (args.phi and args.phi_tilde):
            raise PreconditionError("bank files need --phi and --phi-tilde to attach functions")
        return derive_wavelets(
            bank,
            _function_from_spec(args.phi, args.level),
            _function_from_spec(args.phi_tilde, args.level),
        )
    return resolve_framelet(spec, args.level)


def _cmd_expand(args) -> None:
    grid = _grid_from_args(args)
    f = _signal_from_args(args)
    if args.bank:
        df = _framelet_from_args(args)
        sf = truncated_expansion(df, f, args.n, grid)
        verdict = framelet_gibbs_verdict(df)
    else:
        pair = _pair_from_args(args)
        sf = apply(pair, f, args.n, 0.0, grid)
        verdict = None
    if args.out:
        _write_function_csv(args.out, sf)
        summary = {
            "out": args.out,
            "rows": int(sf.values.shape[0]),
            "level": sf.level,
            "max_value": float(np.max(sf.values)),
            "min_value": float(np.min(sf.values)),
        }
        if verdict is not None:
            summary["verdict"] = verdict
        _emit(summary)
    else:
        payload = sf.to_json_dict()
        if verdict is not None:
            payload["verdict"] = verdict
        _emit(payload)


def _cmd_overshoot_curve(args) -> None:
    grid = _grid_from_args(args)
    pair = _pair_from_args(args)
    ts, R, L = overshoot_curve(pair, num_t=args.num_t, grid=grid)
    summary = {
        "num_t": int(args.num_t),
        "max_R": float(np.max(R)),
        "min_L": float(np.min(L)),
        "argmax_t": float(ts[int(np.argmax(R))]),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("t,R,L\n")
            for t, r, l in zip(ts, R, L):
                fh.write(f"{float(t)!r},{float(r)!r},{float(l)!r}\n")
        summary["out"] = args.out
        _emit(summary)
    else:
        summary["t"] = [float(v) for v in ts]
        summary["R"] = [float(v) for v in R]
        summary["L"] = [float(v) for v in L]
        _emit(summary)


def _cmd_bspline_table(args) -> None:
    if not 1 <= args.level <= 16:
        raise PreconditionError(f"grid level must satisfy 1 <= level <= 16, got {args.level}")
    rows = []
    for m in range(1, args.max_order + 1):
        pair = QuasiProjectionPair(bspline(m), bspline(m))
        construction = build_dual(bspline(m), m)
        rows.append(
            {
                "m": m,
                "identity_lhs": identity_lhs(pair, level=args.level),
                "identity_rhs": identity_rhs(pair),
                "bracket": bracket_second_deriv(pair).value,
                "accuracy_order": accuracy_order(pair),
                "R0": overshoot(pair, 0.0, "right"),
                "dual_shift": construction.N,
                "dual_knots": [float(v) for v in construction.knots],
            }
        )
    _emit({"rows": rows})


# -- parser ---------------------------------------------------------------------


def _add_pair_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--pair", help="builtin name or pair JSON file")
    sp.add_argument("--phi", help="builtin name or function JSON file")
    sp.add_argument("--phi-tilde", dest="phi_tilde", help="builtin name or function JSON file")


def _add_common_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--level", type=int, default=12, help="dyadic grid level (1..16)")
    sp.add_argument("--window", help="evaluation window 'lo,hi'")
    sp.add_argument("--tol", type=float, default=None, help="tolerance override")
    sp.add_argument("--out", help="CSV output path")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gibbslab",
        description="Quasi-projection expansions, overshoot analysis, dual construction.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("analyze-pair", help="first-moment identity, bracket, accuracy order")
    _add_pair_flags(sp)
    _add_common_flags(sp)

    sp = sub.add_parser("gibbs-point", help="overshoot verdict at a jump location")
    _add_pair_flags(sp)
    _add_common_flags(sp)
    sp.add_argument("--x0", required=True, help="exact rational 'p/q' or 'irrational'")

    sp = sub.add_parser("construct-dual", help="build a nonnegative dual of prescribed order")
    _add_common_flags(sp)
    sp.add_argument("--phi", required=True, help="builtin name or function JSON file")
    sp.add_argument("--order", type=int, required=True, help="accuracy order to match")
    sp.add_argument("--knots", help="explicit knots 'a,b,...' (default equally spaced)")

    sp = sub.add_parser("check-oep", help="verify the two filter-bank identities")
    sp.add_argument("bank", help=f"bank JSON file or builtin ({', '.join(bank_names())})")
    _add_common_flags(sp)

    sp = sub.add_parser("expand", help="sample a truncated expansion or quasi-projection")
    _add_pair_flags(sp)
    _add_common_flags(sp)
    sp.add_argument("--bank", help="bank JSON file or builtin name")
    sp.add_argument("--f", default="sgn", help="signal: sgn | gauss | monomial:j")
    sp.add_argument("--x0", default="0/1", help="jump location for sgn (exact rational)")
    sp.add_argument("--n", type=int, default=0, help="expansion level")

    sp = sub.add_parser("overshoot-curve", help="R(t), L(t) over one period of shifts")
    _add_pair_flags(sp)
    _add_common_flags(sp)
    sp.add_argument("--num-t", dest="num_t", type=int, default=64)

    sp = sub.add_parser("bspline-table", help="identity/overshoot/dual table for B-splines")
    _add_common_flags(sp)
    sp.add_argument("--max-order", dest="max_order", type=int, default=4)

    return p


_HANDLERS = {
    "analyze-pair": _cmd_analyze_pair,
    "gibbs-point": _cmd_gibbs_point,
    "construct-dual": _cmd_construct_dual,
    "check-oep": _cmd_check_oep,
    "expand": _cmd_expand,
    "overshoot-curve": _cmd_overshoot_curve,
    "bspline-table": _cmd_bspline_table,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _HANDLERS[args.command](args)
    except (PreconditionError, DimensionMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return 2
    except GibbsLabError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, never crashes
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
