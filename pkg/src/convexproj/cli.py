"""Command-line front end.

Exit codes: 0 on success, 1 on a domain error (reported as JSON on stderr),
2 on unreadable input, schema mismatch or bad flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .benzecri import benzecri_chart, chart_body, verify_benzecri
from .charfn import chi_eval, cone_from_generators, estimate_kappa
from .convexbody import ConvexBody, PolyCone
from .cusps import (
    CuspFamily,
    CuspRep,
    DeformPath,
    GridSpec,
    build_cusp_domain,
    deform_path_check,
    default_flow_weight,
    orbit_certificate,
    radial_flow_for_weight,
    translation_group,
    vfg_test,
    weight_decomposition,
)
from .errors import ConvexProjError
from .selftest import run_selftest
from .serialize import SCHEMA, check_schema, csv_text, dumps, with_schema
from .smoothing import smooth_boundary_patch


class InputError(Exception):
    """Unreadable or malformed input; maps to exit code 2."""


def _load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _parse_vector(text: str, name: str) -> np.ndarray:
    try:
        vec = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise InputError(f"--{name} must be a JSON array of numbers") from exc
    if vec.ndim != 1 or not np.all(np.isfinite(vec)):
        raise InputError(f"--{name} must be a flat array of finite numbers")
    return vec


def _parse(fn, *args):
    """Run a schema parser, turning structural errors into input errors."""
    try:
        return fn(*args)
    except ConvexProjError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"input does not match the schema: {type(exc).__name__}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_normalize(args) -> tuple[dict, list | None]:
    data = _parse(check_schema, _load_json(args.body))
    body = _parse(ConvexBody.from_json, data)
    point = _parse_vector(args.point, "point")
    if len(point) != body.dim:
        raise InputError(f"--point has {len(point)} coordinates, body has dimension {body.dim}")
    chart = benzecri_chart(body, point, polish=not args.no_polish)
    bound = 5.0 ** (body.dim - 1)
    out = chart.to_json()
    out["R_bound"] = bound
    out["verified"] = bool(verify_benzecri(chart_body(body, chart), bound))
    return out, None


def _points_from(data) -> np.ndarray:
    if isinstance(data, dict):
        check_schema(data)
        data = data["points"]
    pts = np.atleast_2d(np.asarray(data, dtype=float))
    if pts.ndim != 2:
        raise ValueError("points must be a list of vectors")
    return pts


def cmd_charfn(args) -> tuple[dict, list | None]:
    cone_data = _parse(check_schema, _load_json(args.cone))
    cone = _parse(PolyCone.from_json, cone_data)
    pts = _parse(_points_from, _load_json(args.points))
    if pts.shape[1] != cone.ambient_dim:
        raise InputError("points and cone have different dimensions")
    tri = cone_from_generators(cone.generators)
    records = [chi_eval(tri, x) for x in pts]
    out = {"records": [r.to_json() for r in records]}
    if args.kappa is not None:
        out["kappa"] = {"samples": args.kappa, "seed": args.seed, "kappa_hat": estimate_kappa(tri, args.kappa, args.seed)}
    rows = None
    if args.csv:
        m = cone.ambient_dim
        rows = [[f"x{i}" for i in range(m)] + ["chi", "c", "min_eig_hess"]]
        rows += [[*map(float, r.x), r.chi, r.c, r.min_eig_hess] for r in records]
    return out, rows


def _patch_from(data: dict):
    check_schema(data)
    return np.asarray(data["points"], dtype=float), np.asarray(data["heights"], dtype=float)


def cmd_smooth(args) -> tuple[dict, list | None]:
    points, heights = _parse(_patch_from, _load_json(args.patch))
    result = smooth_boundary_patch(points, heights, kappa=args.kappa)
    out = {"kappa": args.kappa, **result.to_json()}
    rows = None
    if args.csv:
        d = result.points.shape[1]
        rows = [[f"x{i}" for i in range(d)] + ["height", "smoothed"]]
        rows += [[*map(float, p), float(h), float(s)] for p, h, s in zip(result.points, result.heights, result.smoothed)]
    return out, rows


def _grid(text: str | None) -> GridSpec:
    if text is None:
        return GridSpec()
    try:
        lo, hi, count = text.split(",")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise InputError("--grid must look like lo,hi,count") from exc
    if not lo < hi or count < 2:
        raise InputError("--grid needs lo < hi and count >= 2")
    return GridSpec(lo, hi, count)


def cmd_cusp(args) -> tuple[dict, list | None]:
    grid = _grid(args.grid)
    if args.rep is not None:
        rep = _parse(CuspRep.from_json, _parse(check_schema, _load_json(args.rep)))
        family = None
    else:
        if args.family is None:
            raise InputError("give --family or --rep")
        family = CuspFamily(args.family, args.alpha, args.beta)
        periods = [[1.0, 0.0], [0.0, 1.0]]
        if args.periods is not None:
            try:
                periods = np.asarray(json.loads(args.periods), dtype=float).reshape(-1, 2)
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                raise InputError("--periods must be a JSON list of [s, t] pairs") from exc
        rep = family.lattice(periods)
    if args.point is not None:
        x = _parse_vector(args.point, "point")
    elif family is not None and family.tag == "C0":
        x = np.array([0.0, 0.0, 0.0, 1.0])
    else:
        x = np.ones(rep.size)
    verdict = vfg_test(rep, args.power_bound)
    out = {"rep": rep.to_json(), "vfg": {"ok": verdict.ok, "witness": verdict.witness}}
    if family is not None:
        out = {"family": family.to_json(), **out}
    decomp = weight_decomposition(rep)
    out["weights"] = decomp.to_json()["weights"]
    T = translation_group(rep)
    out["translation_group"] = T.to_json()
    out["flow"] = radial_flow_for_weight(decomp, default_flow_weight(decomp)).to_json()
    cert = orbit_certificate(T, x)
    out["certificate"] = cert.to_json()
    if args.domain:
        out["domain"] = build_cusp_domain(rep, x, grid).to_json()
    return out, None


def cmd_deform(args) -> tuple[dict, list | None]:
    path = _parse(DeformPath.from_json, _parse(check_schema, _load_json(args.path)))
    x = _parse_vector(args.point, "point") if args.point is not None else path.base_point
    if x is None:
        raise InputError("the path has no base_point; give --point")
    report = deform_path_check(path, args.samples, x, _grid(args.grid), args.power_bound)
    return report.to_json(), report.csv_rows() if args.csv else None


def cmd_selftest(args) -> tuple[dict, list | None]:
    result = run_selftest(args.seed)
    rows = [["check", "ok", "detail"]] + [[c["name"], c["ok"], c["detail"]] for c in result["checks"]]
    return result, rows if args.csv else None


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convexproj", description="Computational convex projective geometry.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, csv: bool = True):
        p.add_argument("--out", help="write the output here instead of stdout")
        if csv:
            p.add_argument("--csv", action="store_true", help="emit the tabular view as CSV")

    p = sub.add_parser("normalize", help="Benzecri chart of a convex body about a point")
    p.add_argument("--body", required=True)
    p.add_argument("--point", required=True, help='JSON array, e.g. "[0.1, 0.1]"')
    p.add_argument("--no-polish", action="store_true", help="skip the optimizer fallback")
    common(p, csv=False)
    p.set_defaults(run=cmd_normalize)

    p = sub.add_parser("charfn", help="characteristic function of a polyhedral cone")
    p.add_argument("--cone", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--kappa", type=int, metavar="N", help="estimate the convexity constant from N samples")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(run=cmd_charfn)

    p = sub.add_parser("smooth", help="smooth a convex boundary patch")
    p.add_argument("--patch", required=True)
    p.add_argument("--kappa", type=float, default=0.5)
    common(p)
    p.set_defaults(run=cmd_smooth)

    p = sub.add_parser("cusp", help="certify a generalized cusp group")
    p.add_argument("--family", choices=["C0", "C1", "C2", "C3"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--periods", help="JSON list of [s, t] lattice periods")
    p.add_argument("--rep", help="representation JSON instead of a family")
    p.add_argument("--point", help="base point in homogeneous coordinates")
    p.add_argument("--power-bound", type=int, default=64)
    p.add_argument("--domain", action="store_true", help="also build the sampled cusp domain")
    p.add_argument("--grid", help="orbit grid as lo,hi,count (default -2,2,21)")
    common(p, csv=False)
    p.set_defaults(run=cmd_cusp)

    p = sub.add_parser("deform", help="check cusp hypotheses along a path")
    p.add_argument("--path", required=True)
    p.add_argument("--samples", type=int, default=11)
    p.add_argument("--point", help="base point (default: the path's base_point)")
    p.add_argument("--power-bound", type=int, default=64)
    p.add_argument("--grid", help="orbit grid as lo,hi,count (default -2,2,21)")
    common(p)
    p.set_defaults(run=cmd_deform)

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(run=cmd_selftest)
    return parser


def _error(kind: str, exc: BaseException) -> str:
    return dumps(
        {
            "schema": SCHEMA,
            "error": getattr(exc, "code", kind),
            "type": type(exc).__name__,
            "message": str(exc),
        }
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload, rows = args.run(args)
        text = csv_text(rows) if rows is not None else dumps(with_schema(payload))
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    except InputError as exc:
        sys.stderr.write(_error("input_error", exc))
        return 2
    except OSError as exc:
        sys.stderr.write(_error("io_error", exc))
        return 2
    except ConvexProjError as exc:
        sys.stderr.write(_error("domain_error", exc))
        return 1
    if args.command == "selftest" and not payload["ok"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
