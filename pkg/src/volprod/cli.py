"""Command-line interface: body ingestion, verification campaigns and JSON reports.

Exit codes: 0 when every check passes, 1 when a check fails (for the
single-body commands only with ``--assert``), 2 for usage or parse errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import mahler, signed_volume, symplectic
from .errors import VolprodError
from .geometry import Tolerances, simplex_vertices, tolerances_from_env
from .polytope import HPolytope, VPolytope, cross_polytope, cube, simplex
from .starbody import LpBall, PolytopeBody, StarBody, perturbed_invariant_body, unit_ball
from .symmetry import GroupSpec, generate, orbit_hull

__all__ = ["main", "load_body", "parse_body", "build_parser", "BodyParseError"]

GROUP_CHOICES = ("o-simplex", "so-simplex", "o-diamond", "so-diamond")
SHORTHANDS = {
    "cube": "cube [-1,1]^n",
    "cross": "cross-polytope conv{±e_i}",
    "simplex": "regular simplex with unit circumradius, centroid at o",
    "ball": "Euclidean unit ball",
    "lp:p": "unit ball of the l_p norm, 1 < p < inf",
}
SIGNED_CHECKS = ("patch", "estimate", "duality", "bf", "chain")


class BodyParseError(ValueError):
    """Body file or shorthand could not be turned into a body."""


# body ingestion -------------------------------------------------------------


def _shorthand(name: str, dim: int):
    if name == "cube":
        return cube(dim)
    if name == "cross":
        return cross_polytope(dim)
    if name == "simplex":
        return simplex(dim)
    if name == "ball":
        return unit_ball(dim)
    if name.startswith("lp:"):
        try:
            return LpBall(float(name[3:]), dim)
        except ValueError as exc:
            raise BodyParseError(f"bad l_p shorthand {name!r}: {exc}") from exc
    raise BodyParseError(f"unknown body shorthand {name!r}; known: {', '.join(SHORTHANDS)}")


def _matrix(data, what: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise BodyParseError(f"{what} must be a numeric array") from exc
    if arr.ndim != 2 or arr.shape[0] == 0 or not np.all(np.isfinite(arr)):
        raise BodyParseError(f"{what} must be a non-empty 2-D array of finite numbers")
    return arr


def _group(text, dim: int) -> GroupSpec:
    try:
        return GroupSpec(str(text), dim)
    except ValueError as exc:
        raise BodyParseError(str(exc)) from exc


def _check_dim(found: int, declared) -> int:
    if declared is not None and int(declared) != found:
        raise BodyParseError(f"declared dim {declared} does not match payload dimension {found}")
    return found


def parse_body(spec, default_dim: int = 3):
    """Turn a body record (dict) or shorthand string into a body object."""
    if isinstance(spec, str):
        return _shorthand(spec, default_dim)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise BodyParseError("body record must be an object with a 'kind' field")
    kind = spec["kind"]
    declared = spec.get("dim")
    try:
        if kind == "vpolytope":
            v = _matrix(spec.get("vertices"), "vertices")
            _check_dim(v.shape[1], declared)
            return VPolytope(v)
        if kind == "hpolytope":
            rows = spec.get("halfspaces")
            if isinstance(rows, list) and rows and isinstance(rows[0], dict):
                normals = _matrix([r["normal"] for r in rows], "halfspace normals")
                offsets = np.asarray([float(r["offset"]) for r in rows])
            else:
                h = _matrix(rows, "halfspaces")
                normals, offsets = h[:, :-1], h[:, -1]
            _check_dim(normals.shape[1], declared)
            return HPolytope(normals, offsets).to_vpolytope()
        if kind == "lp_ball":
            if "p" not in spec or declared is None:
                raise BodyParseError("lp_ball needs 'p' and 'dim'")
            return LpBall(float(spec["p"]), int(declared))
        if kind == "perturbed":
            dim = int(declared) if declared is not None else default_dim
            base = parse_body(spec.get("base", "ball"), dim)
            if isinstance(base, (VPolytope, HPolytope)):
                base = PolytopeBody(base)
            _check_dim(base.dim, declared)
            group = generate(_group(spec.get("group", "so-diamond"), base.dim))
            return perturbed_invariant_body(base, group, float(spec.get("eps", 0.05)), int(spec.get("seed", 0)))
        if kind == "orbit_hull":
            pts = _matrix(spec.get("points"), "points")
            _check_dim(pts.shape[1], declared)
            return orbit_hull(pts, generate(_group(spec.get("group", "so-diamond"), pts.shape[1])))
    except BodyParseError:
        raise
    except KeyError as exc:
        raise BodyParseError(f"missing field {exc} in {kind} record") from exc
    except VolprodError as exc:
        raise BodyParseError(f"{kind} record does not describe a valid body: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise BodyParseError(f"bad {kind} record: {exc}") from exc
    raise BodyParseError(f"unknown body kind {kind!r}")


def load_body(text: str, default_dim: int = 3):
    """Load a body from a JSON file path or a built-in shorthand."""
    path = Path(text)
    if text.endswith(".json") or path.is_file():
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise BodyParseError(f"cannot read {text}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise BodyParseError(f"{text} is not valid JSON: {exc}") from exc
        return parse_body(data, default_dim)
    return parse_body(text, default_dim)


def _star(body) -> StarBody:
    return PolytopeBody(body) if isinstance(body, (VPolytope, HPolytope)) else body


def _describe(body) -> dict:
    if isinstance(body, VPolytope):
        return {"kind": "vpolytope", "dim": body.dim, "vertices": len(body.vertices), "facets": len(body.normals)}
    out = {"kind": body.kind, "dim": body.dim}
    if isinstance(body, LpBall):
        out["p"] = body.p
    return out


# reports ----------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def record(name: str, values: dict, passed: bool, bound=None, margin=None) -> dict:
    return {"name": name, "values": values, "bound": bound, "margin": margin, "pass": bool(passed)}


def make_report(argv, seed, tol: Tolerances, records, timestamp: str | None = None) -> dict:
    passed = sum(1 for r in records if r["pass"])
    return _jsonable({
        "command": list(argv),
        "seed": seed,
        "tolerances": {
            "tol_orth": tol.tol_orth,
            "tol_geom": tol.tol_geom,
            "tol_quad": tol.tol_quad,
            "quad_subdivisions": tol.quad_subdivisions,
            "mc_samples": tol.mc_samples,
            "sphere_nodes": tol.sphere_nodes,
        },
        "records": records,
        "summary": {"total": len(records), "passed": passed, "failed": len(records) - passed},
        "timestamp": timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    })


def report_csv(report: dict) -> str:
    """Flatten records to CSV: one row per record, values as ``values.<key>`` columns."""
    keys = []
    for r in report["records"]:
        for k in r["values"]:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "name", "bound", "margin", "pass"] + [f"values.{k}" for k in keys])
    for i, r in enumerate(report["records"]):
        row = [i, r["name"], r["bound"], r["margin"], r["pass"]]
        for k in keys:
            v = r["values"].get(k, "")
            row.append(json.dumps(v) if isinstance(v, list) else v)
        writer.writerow(row)
    return buf.getvalue()


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        s = report["summary"]
        print(f"{s['passed']}/{s['total']} checks passed; report written to {args.out}")
    else:
        print(text)
    if args.csv:
        Path(args.csv).write_text(report_csv(report))


# subcommands ------------------------------------------------------------------


def _cmd_verify(args, tol):
    if not 2 <= args.dim <= 6:
        raise BodyParseError("--dim must lie between 2 and 6 for verify")
    if args.samples < 1:
        raise BodyParseError("--samples must be >= 1")
    spec = GroupSpec(args.group, args.dim)
    margin_tol = args.tol if args.tol is not None else mahler.DEFAULT_MARGIN_TOL
    checks = mahler.verify_bound(spec, args.samples, seed=args.seed, generators_count=args.generators,
                                 workers=args.workers, tolerance=margin_tol)
    recs = [
        record(c.name, {"index": c.index, "product": c.product, "santalo_point": c.santalo_point,
                        "tolerance": c.tolerance}, c.passed, c.bound, c.margin)
        for c in checks
    ]
    return recs, True


def _cmd_volprod(args, tol):
    body = load_body(args.body, args.dim)
    res = mahler.volume_product(body, tol, body_id=args.body)
    kind = "nonsymmetric" if args.bound == "simplex" else "symmetric"
    bound = mahler.mahler_bound(res.santalo_point.size, kind)
    margin_tol = args.tol if args.tol is not None else (mahler.DEFAULT_MARGIN_TOL if res.path == "exact" else tol.tol_quad)
    margin = res.product - bound
    values = {"body": _describe(body), "volume": res.volume, "polar_volume": res.polar_volume_at_santalo,
              "product": res.product, "santalo_point": res.santalo_point, "path": res.path,
              "iterations": res.iterations, "unimodal": res.unimodal}
    name = "simplex-bound" if kind == "nonsymmetric" else "mahler-symmetric-bound"
    return [record(name, values, margin >= -margin_tol, bound, margin)], args.assert_


def _cmd_santalo(args, tol):
    body = load_body(args.body, args.dim)
    res = mahler.volume_product(body, tol, body_id=args.body)
    values = {"body": _describe(body), "santalo_point": res.santalo_point, "polar_volume": res.polar_volume_at_santalo,
              "iterations": res.iterations, "path": res.path}
    return [record("santalo-point", values, res.unimodal)], args.assert_


def _cmd_capacity(args, tol):
    k_body = load_body(args.k, args.dim)
    t_body = load_body(args.t, args.dim)
    cap = symplectic.viterbo_check(k_body, t_body, tol)
    values = {"inradius": cap.inradius, "c_hz": cap.c_hz, "volume": cap.volume,
              "viterbo_lhs": cap.viterbo_lhs, "viterbo_rhs": cap.viterbo_rhs, "exact": cap.exact}
    recs = [record("capacity-inradius", values, cap.passed, cap.viterbo_rhs, cap.margin)]
    if args.chain:
        chain = symplectic.mahler_implies_viterbo_chain(k_body, t_body, tol)
        for link in chain.links:
            recs.append(record(f"chain-{link.name}", {"lhs": link.lhs, "rhs": link.rhs,
                                                       "mahler_class": chain.mahler_class},
                               link.passed, link.rhs, link.slack))
    return recs, args.assert_


def _frame_for(args, n):
    if args.group and args.group.endswith("simplex"):
        return simplex_vertices(n)[:n]
    return np.eye(n)


def _cmd_signed(args, tol):
    body = _star(load_body(args.body, args.dim))
    n = body.dim
    frame = _frame_for(args, n)
    check = args.check
    if check == "patch":
        pv = signed_volume.patch_vector(body, *frame[1:], tol=tol)
        resid = float(np.abs(frame[1:] @ pv.vector).max())
        return [record("patch-vector", {"vector": pv.vector, "error": pv.error, "orthogonality": resid},
                       resid <= 1e-8)], args.assert_
    if check == "estimate":
        boundary = body.boundary_point(np.vstack([frame, frame.sum(axis=0)]))
        points = np.vstack([np.zeros(n), boundary])
        recs = []
        for x in points:
            r = signed_volume.signed_estimate_check(body, frame, x, tol)
            recs.append(record("signed-volume-estimate", {"x": x, "lhs": r.lhs, "rhs": r.rhs,
                                                           "patch_vectors": r.vectors},
                               r.passed, r.rhs, r.rhs - r.lhs))
        return recs, args.assert_
    if check == "duality":
        d = signed_volume.duality_identity(body, *frame[1:], tol=tol)
        limit = args.tol if args.tol is not None else 1e-3
        return [record("patch-duality", {"lhs": d.lhs, "rhs": d.rhs, "residual": d.residual,
                                         "patch_vector": d.patch, "image_vector": d.image},
                       d.residual <= limit, d.rhs, -d.residual)], args.assert_
    if check == "bf":
        alpha = args.alpha
        if alpha is None:
            alpha = -1.0 / n if args.group and args.group.endswith("simplex") else 0.0
        k = args.level if args.level is not None else 2
        r = signed_volume.bf_inequality(body, alpha, k, frame, tol)
        return [record("bf-inequality", {"lhs": r.lhs, "rhs": r.rhs, "factor": r.factor, "k": r.k,
                                         "alpha": r.alpha}, r.passed, r.rhs, r.lhs - r.rhs)], args.assert_
    spec = GroupSpec(args.group or "so-diamond", n)
    chain = signed_volume.ik_chain(body, spec, tol)
    recs = [record("ik-chain-level", {"k": k + 2, "value": chain.values[k + 1], "previous": chain.values[k],
                                      "factor": chain.factors[k]}, chain.passes[k],
                   chain.factors[k] * chain.values[k], chain.values[k + 1] - chain.factors[k] * chain.values[k])
            for k in range(len(chain.factors))]
    bound = signed_volume.ik_chain_bound(n, spec.family)
    recs.append(record("ik-chain-end", {"values": list(chain.values), "scale": chain.scale},
                       chain.values[-1] >= bound - tol.tol_quad, bound, chain.values[-1] - bound))
    return recs, args.assert_


def _cmd_bodies(args, tol):
    if args.body:
        body = load_body(args.body, args.dim)
        return [record("body", _describe(body), True)], False
    return [record("shorthand", {"name": k, "description": v}, True) for k, v in SHORTHANDS.items()], False


COMMANDS = {
    "verify": _cmd_verify,
    "volprod": _cmd_volprod,
    "santalo": _cmd_santalo,
    "capacity": _cmd_capacity,
    "signed": _cmd_signed,
    "bodies": _cmd_bodies,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=3, help="ambient dimension (default 3)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--tol", type=float, default=None, help="margin tolerance for pass/fail")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--csv", help="also write the records as CSV")
    common.add_argument("--assert", dest="assert_", action="store_true", help="exit 1 when a check fails")
    common.add_argument("--group", choices=GROUP_CHOICES, help="symmetry group family")

    parser = _Parser(prog="volprod", description="Volume products, Santalo points and capacities of convex bodies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", parents=[common], help="bound checks on random invariant bodies")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--generators", type=int, default=3, help="random points per orbit hull")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("volprod", parents=[common], help="volume product at the Santalo point")
    p.add_argument("--body", required=True)
    p.add_argument("--bound", choices=("symmetric", "simplex"), default="symmetric")

    p = sub.add_parser("santalo", parents=[common], help="Santalo point")
    p.add_argument("--body", required=True)

    p = sub.add_parser("capacity", parents=[common], help="capacity of a Lagrangian product K x T")
    p.add_argument("--k", required=True)
    p.add_argument("--t", required=True)
    p.add_argument("--chain", action="store_true", help="also report the Mahler-to-Viterbo chain")

    p = sub.add_parser("signed", parents=[common], help="signed-volume checks")
    p.add_argument("--body", required=True)
    p.add_argument("--check", choices=SIGNED_CHECKS, default="estimate")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--level", type=int, default=None, help="level k for the bf check")

    p = sub.add_parser("bodies", parents=[common], help="list shorthands or describe a body file")
    p.add_argument("--body", default=None)
    return parser


def main(argv=None, timestamp: str | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "verify" and not args.group:
        print("volprod verify: error: --group is required", file=sys.stderr)
        return 2
    try:
        tol = tolerances_from_env()
    except ValueError as exc:
        print(f"volprod: error: {exc}", file=sys.stderr)
        return 2
    try:
        records, strict = COMMANDS[args.command](args, tol)
    except BodyParseError as exc:
        print(f"volprod {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except VolprodError as exc:
        print(f"volprod {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    report = make_report(argv, args.seed, tol, records, timestamp)
    _emit(report, args)
    failed = report["summary"]["failed"]
    return 1 if strict and failed else 0


if __name__ == "__main__":
    sys.exit(main())
