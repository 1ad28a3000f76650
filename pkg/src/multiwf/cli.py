"""``multiwf`` command line: geometry, estimates, probes and field files.

Every analysis command prints a JSON report (sorted keys) that embeds the
effective configuration.  Exit status: 0 holds / microregular, 1 fails,
2 inconclusive or error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .estimates import (
    DEFAULT_LADDER,
    IrregularOperatorError,
    SigmaParams,
    characteristic_sample,
    check_multi_quasielliptic,
    check_sigma,
    fit_sigma_params,
    gevrey_index_s_prime,
    operator_geometry,
)
from .grid import GENERATORS, FieldFormatError, make_field, read_field, read_header, write_field
from .polytope import _fmt, is_regular, polyhedron_of, support_of
from .probe import (
    AliasingError,
    TruncationError,
    default_directions,
    fourier_decay_probe,
    inclusion_consistency,
    iterate_growth_probe,
)
from .symbol import DSLSyntaxError, parse_operator
from .weights import IrregularPolyhedronError, QuasiconicSector, anisotropy, k_of

EXIT = {"holds": 0, "microregular": 0, "pass": 0, "fails": 1, "not_microregular": 1, "inconclusive": 2}


class UsageError(ValueError):
    pass


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return _fmt(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _dump(payload: dict) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# argument helpers


def _operator_text(value: str) -> str:
    if value.startswith("@"):
        return Path(value[1:]).read_text(encoding="utf-8").strip()
    return value


def _floats(text: str) -> list[float]:
    return [float(Fraction(t)) for t in text.split(",") if t.strip()]


def _directions(text: str | None, n: int) -> list[list[float]]:
    if text is None:
        return [list(d) for d in default_directions(n)]
    out = [_floats(part) for part in text.split(";") if part.strip()]
    for d in out:
        if len(d) != n or not any(d):
            raise UsageError(f"direction {d} must be a nonzero vector of length {n}")
    return out


def _int_range(text: str) -> list[int]:
    lo, hi = (int(t) for t in text.split(":"))
    if lo < 1 or hi < lo:
        raise UsageError("range must be lo:hi with 1 <= lo <= hi")
    return list(range(lo, hi + 1))


def _kv(items: Sequence[str]) -> dict[str, Any]:
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _x0(args, n: int) -> list[float]:
    if args.x0 is None:
        return [0.0] * n
    x0 = _floats(args.x0)
    if len(x0) != n:
        raise UsageError(f"--x0 needs {n} components")
    return x0


def _load_field(args):
    if args.field is not None:
        return read_field(args.field), {"field": str(args.field)}
    if args.make is not None:
        params = _kv(args.param or [])
        return make_field(args.make, **params), {"generator": args.make, "params": params}
    raise UsageError("give --field <file.gfld> or --make <generator>")


def _operator(args):
    if args.op is None:
        raise UsageError("--op is required")
    text = _operator_text(args.op)
    return parse_operator(text, args.dim), text


# ---------------------------------------------------------------------------
# commands; each returns (result, exit_code)


def cmd_analyze(args):
    P, _ = _operator(args)
    NP = polyhedron_of(P)
    reg = is_regular(P)
    result = {
        "operator": str(P),
        "support": sorted(list(a) for a in support_of(P)),
        "polyhedron": NP.to_dict(),
        "regularity": reg.to_dict(),
    }
    if NP.regular:
        data = anisotropy(NP)
        result["anisotropy"] = data.to_dict()
        result["mu_j"] = result["anisotropy"]["mu_j"]
        result["mu"] = result["anisotropy"]["mu"]
        result["q"] = result["anisotropy"]["q"]
        result["order_function"] = {
            ",".join(map(str, a)): _fmt(k_of(NP, a)) for a in sorted(support_of(P))
        }
    return result, 0 if reg.regular else 1


def cmd_check_mqe(args):
    P, _ = _operator(args)
    rep = check_multi_quasielliptic(
        P, _x0(args, P.n), ladder=args.ladder, samples_per_sphere=args.samples, seed=args.seed
    )
    return rep.to_dict(), EXIT[rep.verdict]


def _params(args, mu) -> SigmaParams:
    mu_prime = float(mu) if args.mu_prime is None else args.mu_prime
    p = SigmaParams(args.rho, args.delta, mu_prime, s=args.s, alpha_max=args.alpha_max)
    p.validate(mu)
    return p


def cmd_sigma(args):
    P, _ = _operator(args)
    _, data = operator_geometry(P)
    params = _params(args, data.mu)
    xi0 = _floats(args.xi0)
    sector = QuasiconicSector.around(data.q, xi0, args.radius)
    rep = check_sigma(
        P, _x0(args, P.n), xi0, params, sector=sector, ladder=args.ladder, samples=args.samples, seed=args.seed
    )
    out = rep.to_dict()
    out["params"] = params.to_dict()
    return out, EXIT[rep.verdict]


def cmd_fit_sigma(args):
    P, _ = _operator(args)
    xi0 = _floats(args.xi0)
    params, rep = fit_sigma_params(
        P, _x0(args, P.n), xi0, s=args.s, ladder=args.ladder, samples=args.samples, seed=args.seed
    )
    _, data = operator_geometry(P)
    out = {"params": params.to_dict() if params else None, "report": rep.to_dict()}
    if params is not None and rep.verdict == "holds":
        out["s_prime"] = gevrey_index_s_prime(
            Fraction(args.s).limit_denominator(10**6),
            Fraction(params.rho).limit_denominator(10**6),
            Fraction(params.delta).limit_denominator(10**6),
            data.mu,
            Fraction(params.mu_prime).limit_denominator(10**6),
        )
    return out, EXIT[rep.verdict]


def cmd_char(args):
    P, _ = _operator(args)
    res = characteristic_sample(P, _x0(args, P.n), samples=args.samples, threshold=args.threshold, seed=args.seed)
    return res, 0


def cmd_sprime(args):
    vals = [Fraction(v) for v in (args.s, args.rho, args.delta, args.mu, args.mu_prime)]
    value = gevrey_index_s_prime(*vals)
    return {"s_prime": value, "s_prime_float": float(value)}, 0


def _combine(verdicts: Sequence[str]) -> int:
    if any(v == "inconclusive" for v in verdicts):
        return 2
    if any(v in ("not_microregular", "fails") for v in verdicts):
        return 1
    return 0


def cmd_probe_wf(args):
    P, _ = _operator(args)
    u, source = _load_field(args)
    if u.n != P.n:
        raise UsageError("operator and field dimensions differ")
    NP, data = operator_geometry(P)
    x0 = _floats(args.x0) if args.x0 else [L / 2 for L in u.lengths]
    rows = []
    for d in _directions(args.directions, u.n):
        sector = QuasiconicSector.around(data.q, d, args.radius)
        rep = fourier_decay_probe(
            u, x0, sector, NP, data, s=args.s, N_range=_int_range(args.N_range),
            K_half=args.K_half, pad=args.pad, p=args.p,
        )
        rows.append({"direction": d, **rep.to_dict()})
    result = {"source": source, "grid": u.header(), "x0": x0, "directions": rows}
    return result, _combine([r["verdict"] for r in rows])


def cmd_probe_iter(args):
    P, _ = _operator(args)
    u, source = _load_field(args)
    if u.n != P.n:
        raise UsageError("operator and field dimensions differ")
    _, data = operator_geometry(P)
    K = None
    if args.K_center is not None:
        K = (_floats(args.K_center), args.K_half)
    rep = iterate_growth_probe(P, u, K, data, s=args.s, N_max=args.N_max)
    out = {"source": source, "grid": u.header(), **rep.to_dict()}
    return out, 0 if rep.verdict == "microregular" else EXIT[rep.verdict]


def cmd_verify(args):
    P, _ = _operator(args)
    u, source = _load_field(args)
    if u.n != P.n:
        raise UsageError("operator and field dimensions differ")
    _, data = operator_geometry(P)
    params = _params(args, data.mu)
    x0 = _floats(args.x0) if args.x0 else [L / 2 for L in u.lengths]
    res = inclusion_consistency(
        P, u, s=args.s, params=params, directions=_directions(args.directions, u.n), x0_set=[x0], seed=args.seed
    )
    res["source"] = source
    if res["violations"]:
        return res, 1
    frac = res["inconclusive_cells"] / max(1, len(res["cells"]))
    return res, 2 if frac > 0.2 else 0


def cmd_field(args):
    if args.action == "info":
        header, raw = read_header(args.path)
        return {"header": header, "raw_header": raw, "path": str(args.path)}, 0
    if args.action == "make":
        if args.out is None:
            raise UsageError("field make needs --out")
        params = _kv(args.params)
        field = make_field(args.generator, **params)
        write_field(args.out, field)
        return {"path": str(args.out), "generator": args.generator, "params": params, "header": field.header()}, 0
    raise UsageError(f"unknown field action {args.action!r}")


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, op: bool = True) -> None:
    if op:
        p.add_argument("--op", help="operator text, or @file holding it")
        p.add_argument("--dim", type=int, default=2, help="number of variables")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", type=Path, default=None, help="also write the report to this path")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp (byte-stable output)")


def _ladder(p):
    p.add_argument("--ladder", type=_floats, default=list(DEFAULT_LADDER), help="comma separated radii")


def _field_src(p):
    p.add_argument("--field", type=Path, default=None, help=".gfld input")
    p.add_argument("--make", choices=sorted(GENERATORS), default=None, help="generate the field instead")
    p.add_argument("--param", action="append", help="generator key=value (repeatable)")


def _sigma_opts(p):
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--mu-prime", type=float, default=None, help="defaults to mu")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--alpha-max", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multiwf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="Newton polyhedron, regularity and anisotropy data")
    _common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check-mqe", help="sample the multi-quasiellipticity estimate")
    _common(p)
    p.add_argument("--x0", default=None)
    p.add_argument("--samples", type=int, default=4096)
    _ladder(p)
    p.set_defaults(func=cmd_check_mqe)

    p = sub.add_parser("sigma", help="check the symbol estimates near (x0, xi0)")
    _common(p)
    p.add_argument("--x0", default=None)
    p.add_argument("--xi0", required=True)
    p.add_argument("--radius", type=float, default=0.15)
    p.add_argument("--samples", type=int, default=256)
    _sigma_opts(p)
    _ladder(p)
    p.set_defaults(func=cmd_sigma)

    p = sub.add_parser("fit-sigma", help="search (rho, delta, mu') for which the estimates hold")
    _common(p)
    p.add_argument("--x0", default=None)
    p.add_argument("--xi0", required=True)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=256)
    _ladder(p)
    p.set_defaults(func=cmd_fit_sigma)

    p = sub.add_parser("char", help="sample characteristic directions")
    _common(p)
    p.add_argument("--x0", default=None)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--threshold", type=float, default=1e-3)
    p.set_defaults(func=cmd_char)

    p = sub.add_parser("sprime", help="exact Gevrey index s'")
    _common(p, op=False)
    for name in ("s", "rho", "delta", "mu", "mu-prime"):
        p.add_argument(f"--{name}", required=True, help="integer, decimal or p/q")
    p.set_defaults(func=cmd_sprime)

    p = sub.add_parser("probe-wf", help="Fourier-decay microregularity probe")
    _common(p)
    _field_src(p)
    p.add_argument("--x0", default=None, help="defaults to the box center")
    p.add_argument("--directions", default=None, help="'1,0;0,1'; default 8 directions")
    p.add_argument("--radius", type=float, default=0.15)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--N-range", default="2:8")
    p.add_argument("--K-half", type=float, default=0.4)
    p.add_argument("--pad", type=float, default=1.6)
    p.add_argument("--p", type=int, default=2)
    p.set_defaults(func=cmd_probe_wf)

    p = sub.add_parser("probe-iter", help="growth of the iterates P^N u")
    _common(p)
    _field_src(p)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--N-max", type=int, default=6)
    p.add_argument("--K-center", default=None, help="box center; default is the whole grid")
    p.add_argument("--K-half", type=float, default=0.4)
    p.set_defaults(func=cmd_probe_iter)

    p = sub.add_parser("verify", help="inclusion consistency over directions")
    _common(p)
    _field_src(p)
    p.add_argument("--x0", default=None)
    p.add_argument("--directions", default=None)
    _sigma_opts(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("field", help="make or inspect .gfld files")
    _common(p, op=False)
    fsub = p.add_subparsers(dest="action", required=True)
    mk = fsub.add_parser("make")
    mk.add_argument("generator", choices=sorted(GENERATORS))
    mk.add_argument("params", nargs="*", help="key=value generator parameters")
    mk.add_argument("--out", type=Path, required=True)
    _common(mk, op=False)
    info = fsub.add_parser("info")
    info.add_argument("path", type=Path)
    _common(info, op=False)
    p.set_defaults(func=cmd_field)
    return parser


def _config(args) -> dict:
    skip = {"func", "json", "no_timestamp"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    report: dict = {"command": args.command, "config": _config(args), "version": __version__}
    try:
        result, code = args.func(args)
        report["result"] = result
    except AliasingError as exc:
        report["error"] = {"type": "aliasing", "message": str(exc), "N": exc.N}
        code = 2
    except (
        DSLSyntaxError,
        IrregularOperatorError,
        IrregularPolyhedronError,
        FieldFormatError,
        TruncationError,
        UsageError,
        ValueError,
        OSError,
    ) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = 2
    report["exit_code"] = code
    if not args.no_timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = _dump(report)
    if args.json is not None:
        args.json.write_text(text + "\n", encoding="utf-8")
    if args.command == "field" and getattr(args, "action", None) == "info" and "result" in report:
        print(report["result"]["raw_header"])
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
