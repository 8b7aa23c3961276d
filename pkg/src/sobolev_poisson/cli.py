"""Command-line driver.

    sobolev-poisson kernel {eval,series,norm,reproduce,diverge} ...
    sobolev-poisson bracket --f phi:0.2 --g pi:0.8 ...
    sobolev-poisson holoflux {holonomy,flux,hf-bracket,jacobi} --scene FILE ...

Every run emits the identity it checks, the tolerance, the quadrature
settings and a pass flag.  Exit codes: 0 pass, 1 identity check failed,
2 usage error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import catalog, holoflux as hf, kernels as kn, phase as ph
from .errors import EvaluationError, GeometryError, ParseError, SobolevError
from .fields import LINE, R3, UNIT, default_scheme, expression_field, parse_field
from .su2 import det_gap, matrix_to_json, unitarity_gap

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

SPACES = {"h1-unit": UNIT, "h1-line": LINE, "h2-r3": R3}


class UsageError(Exception):
    pass


def _point(space, text):
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"bad point {text!r}") from None
    if space.dim == 3:
        if len(vals) != 3:
            raise UsageError("points on R^3 are given as x,y,z")
        return tuple(vals)
    if len(vals) != 1:
        raise UsageError("points on an interval or the line are single numbers")
    return vals[0]


def _kernel_value(space, x, t):
    t = np.asarray(t, dtype=float)
    return float(kn.kernel_eval(kn.KernelPoint(space, x), t))


def _terms(text):
    try:
        return [int(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"bad --terms {text!r}") from None


# kernel -------------------------------------------------------------------------

def cmd_kernel(args):
    space = SPACES[args.space]
    if args.action == "eval":
        x, t = _point(space, args.x), _point(space, args.t)
        v, sym = _kernel_value(space, x, t), _kernel_value(space, t, x)
        tol = 1e-12 if args.tol is None else args.tol
        rows = [{"x": x, "t": t, "value": v, "swapped": sym, "gap": abs(v - sym)}]
        return _meta("kernel symmetry E_x(t) = E_t(x)", tol, default_scheme(space), abs(v - sym) <= tol), rows

    if args.action == "series":
        _need_unit(space, "series")
        x, t = _point(space, args.x), _point(space, args.t)
        closed = _kernel_value(space, x, t)
        rows = []
        ok = True
        for n in _terms(args.terms or "1000"):
            val = kn.kernel_series(x, t, n)
            bound = kn.series_tail_bound(n) if args.tol is None else args.tol
            ok &= abs(val - closed) <= bound
            rows.append({"terms": n, "series": val, "closed": closed, "gap": abs(val - closed), "bound": bound})
        return _meta("basis series equals the closed kernel", "tail bound 1/(2 pi^2 N)" if args.tol is None
                     else args.tol, None, ok), rows

    if args.action == "norm":
        _need_unit(space, "norm")
        x = _point(space, args.x)
        formula = kn.evaluation_operator_norm(x)
        diag = float(np.sqrt(kn.interval_kernel(x, np.asarray([x]))[0]))
        tol = 1e-12 if args.tol is None else args.tol
        rows = [{"x": x, "norm": formula, "sqrt_diagonal": diag, "gap": abs(formula - diag)}]
        return _meta("evaluation operator norm = sqrt(E_x(x))", tol, None, abs(formula - diag) <= tol), rows

    if args.action == "reproduce":
        x = _point(space, args.x)
        point = kn.KernelPoint(space, x)
        key = {"unit": "unit", "line": "line", "r3": "r3"}[space.variant]
        if args.expr:
            fields, labels = [expression_field(args.expr, space)], [args.expr]
        else:
            fields = catalog.field_catalog(key)
            labels = {"unit": catalog.UNIT_EXPRS, "line": catalog.LINE_EXPRS, "r3": catalog.R3_EXPRS}[key]
        table = kn.reproducing_gaps(point, fields)
        tol = 1e-6 if args.tol is None else args.tol
        rows = [{"field": lab, "inner_product": r[0], "value": r[1], "gap": r[2]} for lab, r in zip(labels, table)]
        return _meta("reproducing property <E_x, u> = u(x)", tol, default_scheme(space),
                     bool(table[:, 2].max() < tol)), rows

    if args.action == "diverge":
        _need_unit(space, "diverge")
        x = _point(space, args.x)
        K = _terms(args.terms or "10000")[-1]
        sums = kn.derivative_evaluation_partial_sums(x, K)
        ks = np.arange(1, K + 1)
        margin = 10.0 if args.tol is None else args.tol
        ok = bool(np.all(sums > 2 * ks - margin))
        show = sorted(set(np.unique(np.geomspace(1, K, 25).astype(int))) | {K})
        rows = [{"K": int(k), "partial_sum": float(sums[k - 1]), "lower_bound": 2.0 * k - margin} for k in show]
        return _meta("derivative-evaluation partial sums exceed 2K - c", margin, None, ok), rows
    raise UsageError(f"unknown kernel action {args.action!r}")


def _need_unit(space, what):
    if space.variant != "unit":
        raise UsageError(f"'{what}' is only defined on h1-unit")


# bracket ------------------------------------------------------------------------

def _observable(text):
    name, _, coord = str(text).partition(":")
    name = name.strip().lower()
    if name in ("k", "v"):
        if coord:
            raise UsageError(f"{name.upper()} takes no coordinate")
        return name.upper(), None
    if name not in ("phi", "pi"):
        raise UsageError(f"unknown observable {text!r}; use phi:x, pi:x, K or V")
    return name, (float(coord) if coord else None)


def _make_obs(kind, x):
    if kind == "K":
        return ph.make_K_observable()
    if kind == "V":
        return ph.make_V_observable()
    return ph.make_evaluation_observable(kind, x)


def _reference(fk, fx, gk, gx, p):
    """Closed-form value of ``{f, g}`` and its tolerance."""
    if fk in ("K", "V") and gk in ("K", "V"):
        return 0.0, 0.0
    if fk in ("K", "V"):
        ref, tol = _reference(gk, gx, fk, fx, p)
        return -ref, tol
    if gk in ("K", "V"):
        fn = ph.bracket_with_K if gk == "K" else ph.bracket_with_V
        return fn(fk, fx, p), (0.0 if fk == "phi" else 1e-6)
    if fk == gk:
        return 0.0, 0.0
    val = float(kn.interval_kernel(fx, np.asarray([gx]))[0])
    return (val if fk == "phi" else -val), 1e-8


def cmd_bracket(args):
    p = ph.PhasePoint1D(parse_field(args.phi, UNIT), parse_field(args.pi, UNIT))
    fk, fx = _observable(args.f)
    gk, gx = _observable(args.g)
    meta_q = ph.PHASE_SCHEME
    if args.sweep:
        try:
            R, C = (int(v) for v in args.sweep.lower().split("x"))
        except ValueError:
            raise UsageError(f"bad --sweep {args.sweep!r}; use RxC") from None
        xs = np.linspace(0.0, 1.0, R)
        ys = np.linspace(0.0, 1.0, C) if gk not in ("K", "V") else [None]
        rows, ok, tol_used = [], True, 0.0
        for x in xs:
            for y in ys:
                xf = x if fx is None else fx
                yg = y if gx is None else gx
                val = ph.poisson_bracket(_make_obs(fk, xf), _make_obs(gk, yg), p)
                ref, tol = _reference(fk, xf, gk, yg, p)
                tol = tol if args.tol is None else args.tol
                ok &= abs(val - ref) <= tol
                tol_used = max(tol_used, tol)
                rows.append({"x": float(x), "y": None if y is None else float(y), "value": val})
        limit = tol_used
        return _meta(f"bracket table {{{fk},{gk}}}", limit, meta_q, ok), rows

    if (fk in ("phi", "pi") and fx is None) or (gk in ("phi", "pi") and gx is None):
        raise UsageError("phi/pi need a coordinate (phi:x) unless --sweep is used")
    f, g = _make_obs(fk, fx), _make_obs(gk, gx)
    val = ph.poisson_bracket(f, g, p)
    ref, tol = _reference(fk, fx, gk, gx, p)
    tol = tol if args.tol is None else args.tol
    rows = [{"f": args.f, "g": args.g, "value": val, "reference": ref, "gap": abs(val - ref)}]
    return _meta(f"bracket {{{args.f},{args.g}}}", tol, meta_q, abs(val - ref) <= tol), rows


# holoflux -----------------------------------------------------------------------

def _scene(args):
    if not args.scene:
        raise UsageError("holoflux commands need --scene FILE (or catalog:NAME)")
    if args.scene.startswith("catalog:"):
        name = args.scene.split(":", 1)[1]
        if name not in catalog.SCENES:
            raise UsageError(f"unknown catalog scene {name!r}; have {sorted(catalog.SCENES)}")
        return hf.scene_from_dict(catalog.SCENES[name])
    try:
        return hf.load_scene(args.scene)
    except OSError as exc:
        raise UsageError(f"cannot read scene: {exc}") from None


def _matrix_rows(m):
    return [{"row": r, "col": c, "re": float(m[r, c].real), "im": float(m[r, c].imag)}
            for r in range(2) for c in range(2)]


def cmd_holoflux(args):
    sc = _scene(args)
    p = sc.point
    if args.action == "holonomy":
        kind, n = hf.parse_method(args.method)
        h = hf.holonomy(sc.curve, p, 0.0, 1.0, (kind, n))
        ug, dg = unitarity_gap(h), det_gap(h)
        tol = (1e-8 if kind == "ode" else 1e-6) if args.tol is None else args.tol
        meta = _meta("holonomy is unitary with unit determinant", tol,
                     {"method": f"{kind}:{n}"}, ug <= tol and dg <= tol)
        meta.update({"unitarity_gap": ug, "det_gap": dg, "matrix": matrix_to_json(h)})
        return meta, _matrix_rows(h)

    if args.action == "flux":
        val = hf.flux(sc.flux_f, p)
        flipped = hf.flux(hf.FluxSpec(sc.flux_f.surface.swapped(), sc.flux_f.f, validate=False), p)
        tol = 1e-12 * max(1.0, abs(val)) if args.tol is None else args.tol
        meta = _meta("flux changes sign with the orientation", tol, hf.SURFACE_SCHEME,
                     abs(val + flipped) <= tol)
        return meta, [{"flux": val, "flipped": flipped}]

    if args.action == "hf-bracket":
        B = hf.holonomy_flux_bracket(sc.curve, sc.flux_f, p, method=args.method)
        quad = {"curve": hf.CURVE_SCHEME.describe(), "surface": hf.SURFACE_SCHEME.describe(),
                "method": args.method}
        if args.oracle == "fd":
            O = hf.holonomy_flux_flow_oracle(sc.curve, sc.flux_f, p)
            gap = float(np.linalg.norm(B - O) / np.linalg.norm(B)) if np.linalg.norm(B) else \
                float(np.linalg.norm(O))
            tol = 1e-4 if args.tol is None else args.tol
            meta = _meta("holonomy-flux bracket equals the flow derivative", tol, quad, gap <= tol)
            meta["relative_gap"] = gap
        else:
            tr = hf.trace_holonomy_flux_bracket(sc.curve, sc.flux_f, p, method=args.method)
            gap = abs(np.trace(B) - tr)
            tol = 1e-10 * max(1.0, abs(tr)) if args.tol is None else args.tol
            meta = _meta("trace of the bracket equals the cyclic trace formula", tol, quad, gap <= tol)
            meta["trace_gap"] = float(gap)
        meta["matrix"] = matrix_to_json(B)
        return meta, _matrix_rows(B)

    if args.action == "jacobi":
        if sc.flux_g is None:
            raise UsageError("the jacobi action needs a second flux (test_fields_g / surface_g)")
        rep = hf.jacobi_verifier(sc.curve, sc.flux_f, sc.flux_g, p)
        ratio = 1e-4 if args.tol is None else args.tol
        ok = rep.passed and rep.tol_ratio < ratio
        meta = _meta("Jacobi identity for (Tr h, E[f], E[g])", {"jac_tol": rep.jac_tol, "max_tol_ratio": ratio},
                     {"fine": hf.JACOBI_FINE.__dict__, "coarse": hf.JACOBI_FINE.coarser().__dict__}, ok)
        d = rep.as_dict()
        return meta, [{k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in d.items()}]
    raise UsageError(f"unknown holoflux action {args.action!r}")


# plumbing -------------------------------------------------------------------------

def _meta(identity, tol, quad, passed):
    if hasattr(quad, "describe"):
        quad = quad.describe()
    return {"identity": identity, "tolerance": tol, "quadrature": quad, "passed": bool(passed)}


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _csv_text(rows):
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def _emit(meta, rows, args, out):
    meta = _clean(meta)
    rows = _clean(rows)
    meta["command"] = args.command + (f" {args.action}" if getattr(args, "action", None) else "")
    plot = getattr(args, "emit_plot", None)
    if plot:
        with open(plot, "w", newline="") as fh:
            fh.write(_csv_text(rows))
        with open(plot + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.format == "csv":
        text = _csv_text(rows)
        if args.output:
            with open(args.output, "w", newline="") as fh:
                fh.write(text)
            with open(args.output + ".meta.json", "w") as fh:
                json.dump(meta, fh, indent=2, sort_keys=True)
                fh.write("\n")
        else:
            out.write(text)
            print(json.dumps(meta, sort_keys=True), file=sys.stderr)
        return
    payload = dict(meta)
    payload["rows"] = rows if not plot else len(rows)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="sobolev-poisson", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tol", type=float, default=None, help="override the acceptance threshold")
    common.add_argument("--output", help="write results here instead of standard output")
    sub = parser.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", parents=[common], help="reproducing kernels and the basis series")
    k.add_argument("action", choices=("eval", "series", "norm", "reproduce", "diverge"))
    k.add_argument("--space", choices=tuple(SPACES), default="h1-unit")
    k.add_argument("--x", default="0.5", help="kernel point (x,y,z on h2-r3)")
    k.add_argument("--t", default="0.5", help="evaluation point")
    k.add_argument("--terms", help="series length; comma list for a sweep")
    k.add_argument("--expr", help="field for 'reproduce' (default: the 20-field catalog)")
    k.set_defaults(func=cmd_kernel)

    b = sub.add_parser("bracket", parents=[common], help="Poisson brackets on H1(0,1) x H1(0,1)")
    b.add_argument("--f", required=True, help="phi:x, pi:x, K or V")
    b.add_argument("--g", required=True, help="phi:x, pi:x, K or V")
    b.add_argument("--phi", default="0", help="configuration field of the phase point")
    b.add_argument("--pi", default="0", help="momentum field of the phase point")
    b.add_argument("--sweep", help="RxC grid over x (and y) in [0,1]")
    b.add_argument("--emit-plot", help="write sweep rows as CSV (with a .meta.json sidecar)")
    b.set_defaults(func=cmd_bracket, action=None)

    h = sub.add_parser("holoflux", parents=[common], help="holonomies, fluxes and their brackets")
    h.add_argument("action", choices=("holonomy", "flux", "hf-bracket", "jacobi"))
    h.add_argument("--scene", help="scene JSON file or catalog:NAME")
    h.add_argument("--method", default="ode:1000", help="dyson:N or ode:steps")
    h.add_argument("--oracle", choices=("fd",), help="compare hf-bracket with the flow oracle")
    h.set_defaults(func=cmd_holoflux)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        meta, rows = args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvaluationError, GeometryError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SobolevError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(meta, rows, args, out)
    return EXIT_PASS if meta["passed"] else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
