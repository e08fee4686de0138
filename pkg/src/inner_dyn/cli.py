"""``inner-dyn``: batch interface.

Every output carries a header with the spec hash, parameters, seed,
library version and kernel backend. JSON floats are printed with 17
significant digits; CSV outputs start with the header as a ``#`` comment.
Exit codes: 0 success, 2 precondition violation, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import __version__, kernels
from .errors import NumericError, PreconditionError, ResourceError

STOCHASTIC = {"clt", "llt"}


# -- serialisation --------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    if x == int(x) and abs(x) < 1e17:
        return repr(float(x))
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with 17-significant-digit floats and sorted keys."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number, bool)) or v is None for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps({"re": obj.real, "im": obj.imag}, indent, _level)
    return json.dumps(str(obj))


def _hash_file(path: Optional[str]) -> Optional[str]:
    if not path:
        return None
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# -- argument parsing -----------------------------------------------------------


def _complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_common(p, spec=True, seed=False, psi=False):
    if spec:
        p.add_argument("--spec", required=True, help="inner-function spec JSON")
    if seed:
        p.add_argument("--seed", type=int, required=True, help="random seed (mandatory)")
    if psi:
        p.add_argument("--psi", default="cos", help="cos, sin, cosN, sinN (default cos)")
        p.add_argument("--psi-const", type=float, default=None, help="constant term of a trig observable")
        p.add_argument("--psi-cos", type=_floats, default=None, help="comma list of cos(2 pi n t) coefficients")
        p.add_argument("--psi-sin", type=_floats, default=None, help="comma list of sin(2 pi n t) coefficients")
        p.add_argument("--psi-json", default=None, help='JSON {"coefficients": {"n": [re, im]}, "B": ...}')
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (env INNER_DYN_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inner-dyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"inner-dyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate phi in the disc and tau on the circle")
    _add_common(p)
    p.add_argument("--theta", type=_floats, default=[], help="circle points in [0,1)")
    p.add_argument("--z", type=_complex, action="append", default=[], help="disc point, e.g. 0.3+0.2j")

    p = sub.add_parser("orbit", help="orbit of tau as CSV")
    _add_common(p)
    p.add_argument("--theta0", type=float, required=True)
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("dw", help="Denjoy–Wolff point")
    _add_common(p)

    p = sub.add_parser("clark", help="truncated Clark measure (preimages)")
    _add_common(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--threshold", type=float, default=1e-10)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("matrix", help="transfer matrix as CSV k,l,re,im")
    _add_common(p)
    p.add_argument("--M", type=int, default=64)

    p = sub.add_parser("gap", help="weighted operator norms of T^N")
    _add_common(p)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--M", type=int, default=96)

    p = sub.add_parser("radius", help="second eigenvalue vs |phi'(0)|")
    _add_common(p)
    p.add_argument("--b", type=float, default=1.5)
    p.add_argument("--M", type=int, default=96)

    p = sub.add_parser("twist", help="leading eigenvalues of the twisted operator and sigma^2")
    _add_common(p, psi=True)
    p.add_argument("--t", type=_floats, default=[0.0, 0.1, 0.5], help="comma list of t values")
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--h", type=float, default=1e-3, help="finite-difference step for sigma^2")

    p = sub.add_parser("clt", help="CLT by Monte Carlo, or conditional CLT by preimage tree")
    _add_common(p, seed=False, psi=True)
    p.add_argument("--seed", type=int, default=None, help="mandatory for the Monte-Carlo mode")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--tree-x", type=float, default=None, help="conditional CLT at this point (deterministic)")
    p.add_argument("--backend", choices=kernels.available_backends(), default=None)

    p = sub.add_parser("llt", help="integrated local limit check by Monte Carlo")
    _add_common(p, seed=True, psi=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--interval", type=float, default=0.5)
    p.add_argument("--kappa", type=_floats, default=[0.0, 1.0])
    p.add_argument("--backend", choices=kernels.available_backends(), default=None)

    p = sub.add_parser("scan", help="aperiodicity scan of |lambda(t)|")
    _add_common(p, psi=True)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("construct", help="inner function from an atomic Clark measure")
    _add_common(p, spec=False)
    p.add_argument("--measure", required=True, help='JSON {"atoms": [{"t": ..., "mass": ...}]}')

    p = sub.add_parser("adler", help="expansion and distortion diagnostics")
    _add_common(p)
    p.add_argument("--grid", type=int, default=4096)
    p.add_argument("--d-max", type=int, default=8)
    return parser


# -- commands -----------------------------------------------------------------------


def _observable(args):
    from .twisted import Observable

    if args.psi_json:
        with open(args.psi_json) as fh:
            data = json.load(fh)
        coeffs = {int(n): complex(*v) if isinstance(v, list) else complex(v) for n, v in data["coefficients"].items()}
        return Observable.from_coefficients(coeffs, data.get("B") or math.inf, "fourier")
    if args.psi_cos is not None or args.psi_sin is not None or args.psi_const is not None:
        return Observable.trig(args.psi_const or 0.0, args.psi_cos or (), args.psi_sin or ())
    name = args.psi.lower()
    for kind in ("cos", "sin"):
        if name.startswith(kind):
            n = int(name[len(kind):] or 1)
            return getattr(Observable, kind)(n)
    raise PreconditionError(f"unknown observable {args.psi!r}")


def _spec(args):
    from .inner import InnerFunctionSpec

    return InnerFunctionSpec.load(args.spec)


def _params(args) -> dict:
    skip = {"command", "out", "threads", "spec", "measure", "psi_json", "seed", "format", "backend"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _header(args, spec=None, backend=None, extra=None) -> dict:
    h = {
        "tool": "inner-dyn",
        "version": __version__,
        "command": args.command,
        "spec_hash": spec.digest() if spec is not None else _hash_file(getattr(args, "measure", None)),
        "params": _params(args),
        "seed": getattr(args, "seed", None),
        "backend": backend,
    }
    if getattr(args, "psi_json", None):
        h["psi_hash"] = _hash_file(args.psi_json)
    if extra:
        h.update(extra)
    return h


def cmd_eval(args):
    from .circle import evaluate_restriction
    from .inner import eval_disk

    spec = _spec(args)
    pts = []
    if args.theta:
        v, d1, d2 = evaluate_restriction(spec, np.array(args.theta))
        pts = [{"theta": t, "value": a, "d1": b, "d2": c} for t, a, b, c in zip(args.theta, v, d1, d2)]
    disc = [{"z": z, "phi": complex(eval_disk(spec, z))} for z in args.z]
    return {"header": _header(args, spec), "result": {"circle": pts, "disc": disc}}


def cmd_orbit(args):
    from .circle import orbit

    spec = _spec(args)
    events = []
    pts = orbit(spec, args.theta0, args.n, events)
    lines = ["i,theta"] + [f"{i},{_fmt_float(float(t))}" for i, t in enumerate(pts)]
    return _csv(_header(args, spec, extra={"perturbation_events": len(events)}), lines)


def cmd_dw(args):
    from .inner import denjoy_wolff

    spec = _spec(args)
    return {"header": _header(args, spec), "result": denjoy_wolff(spec).to_dict()}


def cmd_clark(args):
    from .circle import preimages

    spec = _spec(args)
    ca = preimages(spec, args.x, args.threshold)
    header = _header(args, spec)
    if args.format == "csv":
        lines = ["y,weight"] + [f"{_fmt_float(float(y))},{_fmt_float(float(w))}" for y, w in zip(ca.points, ca.weights)]
        return _csv(header, lines)
    return {
        "header": header,
        "result": {
            "x": ca.base,
            "count": len(ca),
            "captured_mass": ca.captured_mass,
            "total_mass": ca.total_mass,
            "tail_estimate": ca.tail_estimate,
            "truncation_threshold": ca.truncation_threshold,
            "atoms": [{"y": float(y), "weight": float(w)} for y, w in zip(ca.points, ca.weights)],
        },
    }


def cmd_matrix(args):
    from .transfer import build_transfer_matrix

    spec = _spec(args)
    T = build_transfer_matrix(spec, args.M)
    return _csv(_header(args, spec, extra={"kappa": T.kappa}), T.to_csv().rstrip("\n").split("\n"))


def cmd_gap(args):
    from .inner import normalize_at_fixed_point
    from .transfer import gap_report

    spec = _spec(args)
    g, d = normalize_at_fixed_point(spec)
    rep = gap_report(g, args.b, args.N, args.M)
    res = rep.to_dict()
    res["conjugation_point"] = d
    res["violations"] = rep.violations()
    return {"header": _header(args, spec), "result": res}


def cmd_radius(args):
    from .inner import normalize_at_fixed_point
    from .transfer import essential_radius_estimate

    spec = _spec(args)
    g, d = normalize_at_fixed_point(spec)
    res = essential_radius_estimate(g, args.b, args.M).to_dict()
    res["conjugation_point"] = d
    return {"header": _header(args, spec), "result": res}


def cmd_twist(args):
    from .twisted import lambda_curve, sigma2_from_eigen

    spec = _spec(args)
    psi = _observable(args)
    lam = lambda_curve(spec, psi, args.t, M=args.M, gap=False)
    res = {
        "observable": psi.to_dict(),
        "lambda": [{"t": t, "re": l.real, "im": l.imag, "abs": abs(l)} for t, l in zip(args.t, lam)],
        "sigma2_eigen": sigma2_from_eigen(spec, psi, args.h, args.M) if psi.nonconstant() else 0.0,
    }
    return {"header": _header(args, spec), "result": res}


def cmd_clt(args):
    from .twisted import clt_check, conditional_clt_check

    spec = _spec(args)
    psi = _observable(args)
    if args.tree_x is not None:
        res = conditional_clt_check(spec, psi, args.tree_x, args.n).to_dict()
        return {"header": _header(args, spec), "result": res}
    if args.seed is None or args.trials is None:
        raise PreconditionError("Monte-Carlo CLT needs --seed and --trials")
    backend = args.backend or kernels.default_backend()
    res = clt_check(spec, psi, args.n, args.trials, args.seed, backend=backend, threads=args.threads).to_dict()
    return {"header": _header(args, spec, backend), "result": res}


def cmd_llt(args):
    from .twisted import llt_check

    spec = _spec(args)
    psi = _observable(args)
    backend = args.backend or kernels.default_backend()
    res = llt_check(spec, psi, args.n, args.trials, args.interval, args.seed, tuple(args.kappa),
                    backend=backend, threads=args.threads).to_dict()
    return {"header": _header(args, spec, backend), "result": res}


def cmd_scan(args):
    from .twisted import aperiodicity_scan, default_t_grid

    spec = _spec(args)
    psi = _observable(args)
    scan = aperiodicity_scan(spec, psi, default_t_grid(args.t_max, args.step), M=args.M)
    header = _header(args, spec)
    if args.format == "csv":
        return _csv(header, scan.to_csv().rstrip("\n").split("\n"))
    return {"header": header, "result": scan.to_dict()}


def cmd_construct(args):
    from .clark import AtomicMeasure, clark_roundtrip_check, inner_from_clark

    pi = AtomicMeasure.load(args.measure)
    spec = inner_from_clark(pi)
    rt = clark_roundtrip_check(pi, spec)
    return {
        "header": _header(args),
        "result": {"measure": pi.to_dict(), "spec": spec.to_dict(), "spec_hash": spec.digest(), "roundtrip": {
            "max_error": rt.max_error, "location_error": rt.location_error, "weight_error": rt.weight_error,
        }},
    }


def cmd_adler(args):
    from .circle import adler_report

    spec = _spec(args)
    return {"header": _header(args, spec), "result": adler_report(spec, args.grid, args.d_max).to_dict()}


COMMANDS = {
    "eval": cmd_eval,
    "orbit": cmd_orbit,
    "dw": cmd_dw,
    "clark": cmd_clark,
    "matrix": cmd_matrix,
    "gap": cmd_gap,
    "radius": cmd_radius,
    "twist": cmd_twist,
    "clt": cmd_clt,
    "llt": cmd_llt,
    "scan": cmd_scan,
    "construct": cmd_construct,
    "adler": cmd_adler,
}


class _CSV(str):
    pass


def _csv(header: dict, lines: list[str]) -> _CSV:
    return _CSV("# " + json.dumps(json.loads(dumps(header)), sort_keys=True) + "\n" + "\n".join(lines) + "\n")


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        os.environ["INNER_DYN_THREADS"] = str(max(1, args.threads))
    try:
        out = COMMANDS[args.command](args)
    except (PreconditionError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"inner-dyn {args.command}: precondition violated: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ResourceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"inner-dyn {args.command}: numeric failure: {exc}", file=sys.stderr)
        return 3
    text = out if isinstance(out, _CSV) else dumps(out) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
