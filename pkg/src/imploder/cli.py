"""Command-line interface.

Every subcommand prints (or writes with --json) a report
{command, inputs, results, residuals, runtime_ms}. Exit status is 0 on
success, 1 on a usage error and 2 on a numeric failure, in which case a
machine-readable error document goes to stderr.

Complex literals are written without spaces: 1, -0.5i, 0.3+2i, 1e-3-4e-2i.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from typing import Optional

import numpy as np

from . import fatou, implosion, lavaurs, render
from .dynamics import (
    Kind,
    PolynomialMap,
    fixed_points,
    format_complex,
    iterate_map,
    orbit,
    parse_complex,
    parse_poly,
    periodic_points,
)
from .errors import DynamicsError, NoFixedPoint
from .julia import connectivity, escape_radius

DEFAULT_POLY = "0,0,1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def jsonable(obj):
    """Complex numbers become [re, im]; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _px(text: str):
    if "x" in text:
        w, h = text.lower().split("x", 1)
        return int(w), int(h)
    return int(text), int(text)


def _int_list(text: str):
    return [int(t) for t in text.split(",") if t.strip()]


def _complex_list(text: str):
    return [parse_complex(t) for t in text.split(",") if t.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--poly", help='ascending coefficients, e.g. "0,1,1,0.95"')
    p.add_argument("--a", type=parse_complex, help="cubic coefficient: shorthand for --poly 0,1,1,a")
    p.add_argument("--center", type=parse_complex)
    p.add_argument("--half-width", type=float)
    p.add_argument("--px", type=_px, help="N or WxH")
    p.add_argument("--n-max", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--tol", type=float, default=fatou.DEFAULT_TOL)
    p.add_argument("--palette", default="paper-grey", choices=render.PALETTES)
    p.add_argument("--out", help="image (or CSV for orbit) path")
    p.add_argument("--json", help="write the report here instead of stdout")
    p.add_argument("--threads", type=int, help="worker threads (fallback: IMPLODER_THREADS)")
    p.add_argument("--config", help="JSON file whose keys override the flags")
    p.add_argument(
        "--deterministic", action="store_true", help="report runtime_ms as 0 for byte-stable output"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="imploder", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    cmds = {}
    for name, help_ in [
        ("julia", "render the filled Julia set"),
        ("stripes", "render the basin striped by Im of the Fatou coordinate"),
        ("lavaurs-map", "render where the Lavaurs map sends the basin"),
        ("k-lavaurs", "render the set of points with bounded Lavaurs orbit"),
        ("fixed-points", "fixed (or periodic) points with multipliers"),
        ("implosion", "convergence of (f + (pi/N)^2)^N to the Lavaurs map"),
        ("key-limit", "error of the n^2 return map against the Lavaurs map"),
        ("wander", "numerical witness of a wandering Fatou component"),
        ("quartic-scan", "real attracting Lavaurs fixed points of z + z^2 + b z^4"),
        ("orbit", "dump an orbit as CSV"),
    ]:
        cmds[name] = sub.add_parser(name, help=help_)
        _common(cmds[name])
    cmds["lavaurs-map"].add_argument("--z", type=_complex_list, help="also evaluate L at these points")
    cmds["fixed-points"].add_argument("--period", type=int, default=1)
    cmds["implosion"].add_argument("--N", type=_int_list, default=[64, 128, 256, 512])
    cmds["implosion"].add_argument("--samples", type=int, default=10)
    cmds["key-limit"].add_argument("--z", type=parse_complex, default=complex(-0.2, 0.3))
    cmds["key-limit"].add_argument("--w", type=parse_complex, default=0.3 + 0j)
    cmds["key-limit"].add_argument("--n", type=_int_list, default=[5, 10, 20, 40])
    w = cmds["wander"]
    w.add_argument("--n-cap", type=int, default=25)
    w.add_argument("--samples", type=int, default=100)
    w.add_argument("--w-center", type=parse_complex, default=0.25 + 0j)
    w.add_argument("--w-radius", type=float, default=0.1)
    q = cmds["quartic-scan"]
    q.add_argument("--b-lo", type=float, default=-8 / 27)
    q.add_argument("--b-hi", type=float, default=0.0)
    q.add_argument("--steps", type=int, default=50)
    o = cmds["orbit"]
    o.add_argument("--z0", type=parse_complex, default=0j)
    o.add_argument("--skew", action="store_true", help="orbit of the skew product (f(z) + pi^2/4 w, w - w^2)")
    o.add_argument("--w0", type=parse_complex, default=0.25 + 0j)
    parser._cmds = cmds
    return parser


def _apply_config(args, sub: argparse.ArgumentParser):
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    actions = {a.dest: a for a in sub._actions}
    for key, value in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in actions or dest in ("help", "config"):
            raise UsageError(f"unknown config key {key!r}")
        act = actions[dest]
        if isinstance(value, str) and act.type is not None:
            value = act.type(value)
        elif isinstance(value, list) and len(value) == 2 and act.type is parse_complex:
            value = complex(value[0], value[1])
        elif isinstance(value, (int, float)) and act.type is parse_complex:
            value = complex(value)
        elif isinstance(value, list) and act.type is _px:
            value = (int(value[0]), int(value[1]))
        elif isinstance(value, (int, float)) and act.type is _px:
            value = (int(value), int(value))
        setattr(args, dest, value)


def _poly(args, default: Optional[str] = DEFAULT_POLY) -> PolynomialMap:
    if args.a is not None:
        if args.poly is not None:
            raise UsageError("give either --poly or --a, not both")
        return PolynomialMap((0, 1, 1, args.a)) if args.a != 0 else PolynomialMap((0, 1, 1))
    text = args.poly if args.poly is not None else default
    if text is None:
        raise UsageError("--poly or --a is required")
    try:
        return parse_poly(text)
    except ValueError as exc:
        raise UsageError(f"bad --poly: {exc}") from exc


def _model(args) -> fatou.ParabolicModel:
    return fatou.normalize_parabolic(_poly(args, default="0,1,1,0.95"))


def _spec(args, center, half_width, n_max, depth=20) -> render.RasterSpec:
    w, h = args.px or (256, 256)
    try:
        return render.RasterSpec(
            center=args.center if args.center is not None else center,
            half_width=args.half_width if args.half_width is not None else half_width,
            px_w=w,
            px_h=h,
            n_max=args.n_max if args.n_max is not None else n_max,
            depth=args.depth if args.depth is not None else depth,
            palette=args.palette,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit_raster(args, r: render.Raster):
    if args.out:
        render.write_ppm(r, args.out)
    return {"spec": r.spec.to_dict(), "counts": r.counts(), "image": args.out}


def _poly_inputs(p: PolynomialMap):
    return {"poly": ",".join(format_complex(c) for c in p.coeffs)}


# ---------------------------------------------------------------------------
# subcommands: each returns (inputs, results, residuals)


def cmd_julia(args):
    p = _poly(args)
    spec = _spec(args, 0j, 1.5, 200)
    r = render.render_filled_julia(p, spec, args.threads)
    res = _emit_raster(args, r)
    res["bounded_pixels"] = r.counts().get("0", 0)
    res["escape_radius"] = escape_radius(p)
    if p.degree >= 2:
        res["connectivity"] = connectivity(p).status.value
    return _poly_inputs(p), res, {}


def cmd_stripes(args):
    m = _model(args)
    spec = _spec(args, complex(-0.2), 0.6, render.FATOU_NMAX)
    r = render.render_fatou_stripes(m, spec, args.threads)
    res = _emit_raster(args, r)
    res.update(r.meta)
    res["model"] = m.to_dict()
    return _poly_inputs(m.f), res, {"conjugate_imag": abs(r.meta["v_plus"][1] + r.meta["v_minus"][1])}


def cmd_lavaurs_map(args):
    m = _model(args)
    spec = _spec(args, complex(-0.2), 0.6, render.FATOU_NMAX)
    r = render.render_lavaurs(m, spec, args.threads)
    res = _emit_raster(args, r)
    resid = {}
    if args.z:
        zs = np.array(args.z, dtype=complex)
        vals, st = lavaurs.lavaurs_array(m, m.to_model(zs), args.tol)
        res["values"] = [
            {"z": z, "L": m.from_model(v) if s == fatou.OK else None} for z, v, s in zip(zs, vals, st)
        ]
    return _poly_inputs(m.f), res, resid


def cmd_k_lavaurs(args):
    m = _model(args)
    spec = _spec(args, complex(-0.2), 0.6, render.FATOU_NMAX)
    fps = lavaurs.find_attracting_fixed_points(m, tol=args.tol)
    r = render.render_k_lavaurs(m, fps, spec, args.threads)
    res = _emit_raster(args, r)
    res["attractors"] = [fp.to_dict() for fp in fps]
    return _poly_inputs(m.f), res, {}


def cmd_fixed_points(args):
    p = _poly(args)
    if args.period < 1:
        raise UsageError("--period must be >= 1")
    recs = fixed_points(p) if args.period == 1 else periodic_points(p, args.period)
    res = {"period": args.period, "points": [r.to_dict() for r in recs]}
    resid = {"max_fixed_residual": 0.0}
    q = iterate_map(p, args.period)
    for r in recs:
        resid["max_fixed_residual"] = max(resid["max_fixed_residual"], abs(q(r.location) - r.location))
    if p.degree >= 2:
        res["infinity"] = {"location": "infinity", "classification": "superattracting"}
    parabolic = []
    for r in recs:
        if args.period != 1 or r.classification.kind is not Kind.PARABOLIC or r.classification.q != 1:
            continue
        # a parabolic point with one petal is a double root: analyse it once
        if all(abs(r.location - q_.location) > 1e-8 for q_ in parabolic):
            parabolic.append(r)
    lav = []
    horn_resid = 0.0
    for r in parabolic:
        try:
            m = fatou.normalize_parabolic(p, r.location)
        except DynamicsError:
            continue
        fps = lavaurs.find_attracting_fixed_points(m, tol=args.tol)
        for fp in fps:
            d = fp.to_dict()
            d["xi"] = jsonable(m.from_model(fp.xi))
            d["parabolic_point"] = jsonable(r.location)
            lav.append(d)
            horn_resid = max(horn_resid, abs(lavaurs.horn(m, fp.Z_f, args.tol) - fp.Z_f))
    if parabolic:
        res["lavaurs_fixed_points"] = lav
        resid["max_horn_residual"] = horn_resid
    return _poly_inputs(p), res, resid


def _implosion_samples(k: int):
    # off the real axis: for real a the Lavaurs map sends real basin points to infinity
    return np.linspace(-0.3, -0.1, k) + 0.3j


def cmd_implosion(args):
    m = _model(args)
    zs = _implosion_samples(args.samples)
    errs = [implosion.implosion_error(m, m.to_model(zs), N) for N in args.N]
    res = {
        "samples": [complex(z) for z in zs],
        "N": args.N,
        "errors": errs,
        "halving": all(b < a for a, b in zip(errs, errs[1:])),
    }
    return {**_poly_inputs(m.f), "N": args.N, "samples": args.samples}, res, {}


def cmd_key_limit(args):
    m = _model(args)
    if not (m.scale == 1 and m.shift == 0):
        raise UsageError("key-limit needs a map already in the form z + z^2 + a z^3 + ...")
    F = implosion.SkewMap(m.f, PolynomialMap((0, 1, -1)), implosion.COUPLING)
    errs = [implosion.key_limit_error(F, m, args.z, args.w, n) for n in args.n]
    res = {"n": args.n, "errors": errs, "decreasing": all(b < a for a, b in zip(errs, errs[1:]))}
    return {**_poly_inputs(m.f), "z": args.z, "w": args.w, "n": args.n}, res, {}


def cmd_wander(args):
    m = _model(args)
    if not (m.scale == 1 and m.shift == 0):
        raise UsageError("wander needs a map already in the form z + z^2 + a z^3 + ...")
    F = implosion.SkewMap(m.f, PolynomialMap((0, 1, -1)), implosion.COUPLING)
    fps = lavaurs.find_attracting_fixed_points(m, tol=args.tol)
    if not fps:
        raise NoFixedPoint("no attracting Lavaurs fixed point found")
    rep = implosion.wandering_witness(
        F, m, fps[0], args.n_cap, args.samples, args.w_center, args.w_radius
    )
    inputs = {
        **_poly_inputs(m.f),
        "n_cap": args.n_cap,
        "samples": args.samples,
        "w_center": args.w_center,
        "w_radius": args.w_radius,
    }
    return inputs, rep.to_dict(), {"fixed_point_rho": abs(fps[0].rho)}


def cmd_quartic_scan(args):
    try:
        hits = implosion.real_quartic_scan(args.b_lo, args.b_hi, args.steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out, worst = [], 0.0
    for b, fp in hits:
        m = fatou.normalize_parabolic(PolynomialMap((0, 1, 1, 0, b)))
        r = abs(lavaurs.lavaurs(m, fp.xi, args.tol) - fp.xi)
        worst = max(worst, r)
        out.append({"b": b, "fixed_point": fp.to_dict(), "residual": r})
    inputs = {"b_lo": args.b_lo, "b_hi": args.b_hi, "steps": args.steps}
    return inputs, {"hits": out, "count": len(out)}, {"max_lavaurs_residual": worst}


def cmd_orbit(args):
    n = args.n_max if args.n_max is not None else 100
    if args.skew:
        m = _model(args)
        F = implosion.SkewMap(m.f, PolynomialMap((0, 1, -1)), implosion.COUPLING)
        pts = implosion.skew_orbit(F, args.z0, args.w0, n)
        if args.out:
            with open(args.out, "w", newline="", encoding="utf-8") as fh:
                wr = csv.writer(fh, lineterminator="\n")
                wr.writerow(["n", "z_re", "z_im", "w_re", "w_im"])
                for k, (z, w) in enumerate(pts):
                    wr.writerow([k, repr(z.real), repr(z.imag), repr(w.real), repr(w.imag)])
        res = {"length": len(pts), "last": list(pts[-1]), "csv": args.out}
        return {**_poly_inputs(m.f), "z0": args.z0, "w0": args.w0, "n_max": n}, res, {}
    p = _poly(args)
    tr = orbit(p, args.z0, n, escape_radius(p))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["n", "re", "im"])
            for k, z in enumerate(tr.points):
                wr.writerow([k, repr(z.real), repr(z.imag)])
    res = {
        "length": len(tr.points),
        "escaped": tr.escaped,
        "escape_index": tr.escape_index,
        "last": tr.points[-1],
        "csv": args.out,
    }
    return {**_poly_inputs(p), "z0": args.z0, "n_max": n}, res, {}


COMMANDS = {
    "julia": cmd_julia,
    "stripes": cmd_stripes,
    "lavaurs-map": cmd_lavaurs_map,
    "k-lavaurs": cmd_k_lavaurs,
    "fixed-points": cmd_fixed_points,
    "implosion": cmd_implosion,
    "key-limit": cmd_key_limit,
    "wander": cmd_wander,
    "quartic-scan": cmd_quartic_scan,
    "orbit": cmd_orbit,
}


def _error(doc: dict, code: int) -> int:
    sys.stderr.write(json.dumps(doc) + "\n")
    return code


_VALUE_FLAGS = {"--poly", "--a", "--center", "--z", "--z0", "--w", "--w0", "--w-center", "--b-lo", "--b-hi"}


def _glue_negative(argv):
    """Let values such as -1,0,1 or -0.2+0.3i follow their flag directly."""
    out, k = [], 0
    while k < len(argv):
        tok = argv[k]
        nxt = argv[k + 1] if k + 1 < len(argv) else None
        if tok in _VALUE_FLAGS and nxt is not None and nxt.startswith("-") and not nxt.startswith("--"):
            out.append(f"{tok}={nxt}")
            k += 2
        else:
            out.append(tok)
            k += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_glue_negative(argv))
        if args.config:
            _apply_config(args, parser._cmds[args.command])
        if args.threads is not None and args.threads < 1:
            raise UsageError("--threads must be >= 1")
        t0 = time.perf_counter()
        inputs, results, residuals = COMMANDS[args.command](args)
        elapsed = 0.0 if args.deterministic else (time.perf_counter() - t0) * 1e3
    except UsageError as exc:
        return _error({"error": "USAGE", "message": str(exc)}, 1)
    except DynamicsError as exc:
        return _error(exc.to_dict(), 2)
    except (ValueError, TypeError) as exc:
        return _error({"error": "USAGE", "message": str(exc)}, 1)
    except OSError as exc:
        return _error({"error": "IO", "message": str(exc)}, 2)
    report = {
        "command": args.command,
        "inputs": jsonable(inputs),
        "results": jsonable(results),
        "residuals": jsonable(residuals),
        "runtime_ms": round(elapsed, 3),
    }
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    if args.json:
        try:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            return _error({"error": "IO", "message": f"cannot write {args.json!r}: {exc}"}, 2)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
