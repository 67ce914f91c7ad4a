"""Command-line surface.

Subcommands: analyze, radius, sharp, verify, kor, probe.  Reports are JSON
(schema 1, sorted keys, byte-stable for a fixed seed); curve data goes to
CSV, and with --outdir the report, curves and matplotlib figures are
written side by side.

Exit codes: 0 success, 2 usage or I/O error, 3 not applicable,
4 inconclusive.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .config import RunConfig, load_default_config
from .errors import (InconclusiveError, KorSearchError, NotApplicableError,
                     QuadratureError, UnsupportedMapError)
from .geometry import kor_point, kor_verify
from .integrals import classify_divergence, integrate_I, psi_from_field, upper_anchor
from .mappings import (RadialStretch, equicontinuity_probe,
                       parse_mapspec, split_mapspec_list,
                       verify_ring_inequality)
from .qfield import fmo_oscillation, log_growth_check, parse_qspec, q_profile
from .radius import (build_sharpness, corollary_report, default_parameters,
                     estimate_delta, fmo_report)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_APPLICABLE = 3
EXIT_INCONCLUSIVE = 4

_DEFAULT_EPS = [0.5 ** k for k in range(3, 13)]


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def jsonable(obj):
    """Recursively convert reports/dataclasses/numpy values to JSON types."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return repr(obj)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ringinj-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _curves_text(curves: dict) -> str:
    lines = []
    for name, (header, rows) in curves.items():
        lines.append(f"# {name}")
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(v if isinstance(v, str) else repr(float(v))
                                  for v in row))
    return "\n".join(lines) + "\n"


def _emit(args, report: dict, curves: dict, figure_fn=None):
    """Write the JSON report (stdout or files), CSV curves and figures."""
    report = {"schema": 1, "version": __version__, **report}
    text = json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"

    wrote = []
    if args.outdir:
        os.makedirs(args.outdir, exist_ok=True)
        report_path = os.path.join(args.outdir, "report.json")
        _atomic_write(report_path, text)
        wrote.append(report_path)
        if curves:
            curve_path = os.path.join(args.outdir, "curves.csv")
            _atomic_write(curve_path, _curves_text(curves))
            wrote.append(curve_path)
        if figure_fn is not None and not args.no_figures:
            wrote.extend(figure_fn(args.outdir))
        print("\n".join(wrote))
    elif args.out:
        _atomic_write(args.out, text)
    elif getattr(args, "format", "json") == "csv":
        sys.stdout.write(_curves_text(curves) if curves else "")
    else:
        sys.stdout.write(text)
    if args.csv and curves:
        _atomic_write(args.csv, _curves_text(curves))


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--seed", type=int, help="Monte Carlo seed")
    sub.add_argument("--samples", type=int, help="Monte Carlo sample count")
    sub.add_argument("--abs-tol", type=float, help="quadrature absolute tolerance")
    sub.add_argument("--rel-tol", type=float, help="quadrature relative tolerance")
    sub.add_argument("--r-max", type=float,
                     help="upper cap for singular tail integrals")
    sub.add_argument("--r-cap", type=float,
                     help="fallback radius when the capped tail diverges")
    sub.add_argument("--cap-constant", type=float,
                     help="override the pinned spherical-cap constant")
    sub.add_argument("--out", help="write the JSON report to this file")
    sub.add_argument("--outdir",
                     help="write report + CSV curves + figures to a directory")
    sub.add_argument("--csv", help="write curve data to this CSV file")
    sub.add_argument("--format", choices=["json", "csv"], default="json",
                     help="stdout payload when neither --out nor --outdir "
                          "is given")
    sub.add_argument("--no-figures", action="store_true",
                     help="suppress figure rendering in --outdir mode")


def _config_from(args) -> RunConfig:
    cfg = load_default_config()
    overrides = {"seed": args.seed, "sample_count": args.samples,
                 "abs_tol": args.abs_tol, "rel_tol": args.rel_tol,
                 "r_max": args.r_max, "r_cap": args.r_cap,
                 "cap_constant": args.cap_constant}
    overrides.update({k: v for k, v in getattr(args, "_extra_cfg", {}).items()})
    fields = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(cfg, **fields)


def _parse_vector(text: str, n: int) -> np.ndarray:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) == 1 and float(parts[0]) == 0.0:
        return np.zeros(n)
    v = np.array([float(p) for p in parts])
    if len(v) != n:
        raise ValueError(f"expected a {n}-vector, got {text!r}")
    return v


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    cfg = _config_from(args)
    q = parse_qspec(args.q)
    n = args.n
    lo, hi = q.coverage()
    grid_lo = max(lo * (1 + 1e-9), 2.0 ** -16)
    grid_hi = min(hi, 0.5)
    grid = np.exp(np.linspace(math.log(grid_lo), math.log(grid_hi), 33))
    profile = q_profile(q, np.zeros(n), grid, cfg)

    divergence = classify_divergence(q, n, cfg)
    try:
        growth = log_growth_check(profile, n)
        growth_out = jsonable(growth)
    except InconclusiveError as exc:
        growth_out = {"holds": None, "reason": str(exc)}

    eps_grid = [e for e in _DEFAULT_EPS if e < 1.0 - 1e-9]
    fmo = fmo_oscillation(q, np.zeros(n), eps_grid, cfg)

    anchor = upper_anchor(q, n, cfg)
    psi = psi_from_field(q, n, 0.0, anchor)
    tail_results = [integrate_I(psi, float(r), anchor, cfg)
                    if r < anchor else None for r in grid]
    itail = [res.value if res else 0.0 for res in tail_results]

    report = {
        "command": "analyze", "q": q.spec_string(), "n": n,
        "profile": {"r": list(grid), "q0": list(profile.values)},
        "divergence": jsonable(divergence),
        "growth": growth_out,
        "fmo": jsonable(fmo),
        "tail": {"anchor": anchor, "I": jsonable(itail),
                 "abs_error_estimate": jsonable(
                     [res.abs_error_estimate if res else 0.0
                      for res in tail_results]),
                 "diverged_at": [res.diverged_at if res else None
                                 for res in tail_results]},
    }
    curves = {
        "q0_curve": (["r", "q0", "I_tail"],
                     [(float(r), float(v), float(i)) for r, v, i in
                      zip(grid, profile.values, itail)]),
        "divergence_partials": (["eps", "I_partial"],
                                [(float(e), float(v)) for e, v in
                                 divergence.partial_values]),
    }

    def figures(outdir):
        from . import plots
        written = plots.render_profile(list(grid), list(profile.values),
                                       itail, outdir)
        written += plots.render_divergence(divergence.partial_values, outdir,
                                           divergence.verdict)
        return written

    _emit(args, report, curves, figures)
    return EXIT_OK


def cmd_radius(args) -> int:
    cfg = _config_from(args)
    q = parse_qspec(args.q)
    n = args.n
    try:
        if args.method == "canonical":
            params = default_parameters(n, "canonical", q, cfg)
            rep = estimate_delta(q, n, "canonical", params, cfg)
        elif args.method == "log_growth":
            rep = corollary_report(q, n, cfg)
        else:
            rep = fmo_report(q, n, cfg)
    except NotApplicableError as exc:
        _emit(args, {"command": "radius", "q": args.q, "n": n,
                     "method": args.method, "error": str(exc),
                     "delta": 0.0}, {})
        return EXIT_NOT_APPLICABLE
    except InconclusiveError as exc:
        _emit(args, {"command": "radius", "q": args.q, "n": n,
                     "method": args.method, "error": str(exc)}, {})
        return EXIT_INCONCLUSIVE

    report = {
        "command": "radius",
        "n": rep.n, "q": rep.q_summary, "psi": rep.psi_kind,
        "divergence": {"verdict": rep.divergence.verdict,
                       "partials": jsonable(rep.divergence.partial_values),
                       "fit": jsonable(rep.divergence.fit)},
        "params": jsonable(rep.params),
        "I_target": rep.I_target,
        "delta": rep.delta,
        "method": rep.method,
        "caveats": list(rep.caveats),
        "details": jsonable(rep.details),
        "witnesses": [], "ring_checks": [],
    }
    if rep.growth is not None:
        report["growth"] = jsonable(rep.growth)
    if rep.fmo is not None:
        report["fmo"] = jsonable(rep.fmo)
    curves = {
        "divergence_partials": (["eps", "I_partial"],
                                [(float(e), float(v)) for e, v in
                                 rep.divergence.partial_values]),
    }

    def figures(outdir):
        from . import plots
        return plots.render_divergence(rep.divergence.partial_values, outdir,
                                       rep.divergence.verdict)

    _emit(args, report, curves, figures)
    if rep.divergence.verdict == "inconclusive":
        return EXIT_INCONCLUSIVE
    if rep.delta > 0.0:
        return EXIT_OK
    return EXIT_NOT_APPLICABLE


def cmd_sharp(args) -> int:
    cfg = _config_from(args)
    q = parse_qspec(args.q)
    n = args.n
    if not 0.0 < args.delta < 1.0:
        raise SystemExit(_usage_error("delta must lie in (0, 1)"))
    try:
        plan = build_sharpness(q, args.delta, n, cfg)
    except NotApplicableError as exc:
        _emit(args, {"command": "sharp", "q": args.q, "n": n,
                     "delta": args.delta, "error": str(exc)}, {})
        return EXIT_NOT_APPLICABLE
    except InconclusiveError as exc:
        _emit(args, {"command": "sharp", "q": args.q, "n": n,
                     "delta": args.delta, "error": str(exc)}, {})
        return EXIT_INCONCLUSIVE

    report = {
        "command": "sharp",
        "n": n, "q": q.spec_string(), "delta": plan.delta,
        "winding_order": plan.k, "K": plan.K,
        "q_tilde": plan.q_tilde.spec_string(),
        "sigma": plan.sigma,
        "domain_radius": plan.domain_radius,
        "axis": {"point": jsonable(plan.axis.point),
                 "clearance": plan.clearance},
        "normalize_by_K": plan.normalize_by_K,
        "witnesses": [jsonable(plan.witness)],
        "ring_checks": [{"against": lab, **jsonable(chk)}
                        for lab, chk in plan.ring_checks],
        "caveats": list(plan.caveats),
    }
    curves = {
        "ring_checks": (["r1", "r2", "against", "lhs", "rhs", "slack"],
                        [(c.r1, c.r2, lab, c.lhs_modulus, c.rhs_bound,
                          c.slack) for lab, c in plan.ring_checks]),
    }

    def figures(outdir):
        from . import plots
        written = plots.render_witness(plan, outdir)
        written += plots.render_ring_checks(plan.ring_checks, outdir)
        written += plots.render_stretch(plan.stretch, outdir)
        return written

    _emit(args, report, curves, figures)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config_from(args)
    n = args.n
    f = parse_mapspec(args.map, n, cfg)
    q = parse_qspec(args.q)
    if not isinstance(f, RadialStretch):
        raise SystemExit(_usage_error(
            "ring verification needs a radial stretch map spec"))
    pairs = [(args.r1, args.r2)]
    if args.grid > 1:
        rs = np.exp(np.linspace(math.log(args.r1), math.log(args.r2),
                                args.grid + 1))
        pairs = [(float(rs[i]), float(rs[j]))
                 for i in range(len(rs)) for j in range(i + 1, len(rs))]
    checks = [("q", verify_ring_inequality(f, q, r1, r2, n, cfg))
              for r1, r2 in pairs]
    report = {
        "command": "verify", "map": args.map, "q": args.q, "n": n,
        "ring_checks": [{"against": lab, **jsonable(c)} for lab, c in checks],
        "all_passed": all(c.passed for _, c in checks),
    }
    curves = {
        "ring_checks": (["r1", "r2", "lhs", "rhs", "slack", "passed"],
                        [(c.r1, c.r2, c.lhs_modulus, c.rhs_bound, c.slack,
                          float(c.passed)) for _, c in checks]),
    }

    def figures(outdir):
        from . import plots
        return plots.render_ring_checks(checks, outdir)

    _emit(args, report, curves, figures)
    return EXIT_OK


def cmd_kor(args) -> int:
    cfg = _config_from(args)
    a = np.array([float(v) for v in args.a.split(",")])
    b = np.array([float(v) for v in args.b.split(",")])
    try:
        p = kor_point(a, b, args.r, t_count=args.t_count, seed=cfg.seed)
        cert = kor_verify(p, a, b, args.r, t_count=args.t_count)
        failed = False
    except KorSearchError as exc:
        cert = kor_verify(exc.best_point, a, b, args.r, t_count=args.t_count)
        failed = True
    report = {
        "command": "kor", "r": args.r,
        "a": jsonable(a), "b": jsonable(b),
        "p": jsonable(cert.p),
        "branch": list(cert.branch),
        "t_samples": jsonable(cert.t_samples),
        "all_pass": cert.all_pass,
    }
    curves = {"branches": (["t", "branch"],
                           [(float(t), int(br)) for t, br in
                            zip(cert.t_samples, cert.branch)])}

    def figures(outdir):
        from . import plots
        return plots.render_kor(cert, outdir)

    _emit(args, report, curves, figures)
    return EXIT_INCONCLUSIVE if failed else EXIT_OK


def cmd_probe(args) -> int:
    cfg = _config_from(args)
    n = args.n
    specs = split_mapspec_list(args.family)
    family = [parse_mapspec(s, n, cfg) for s in specs]
    x0 = _parse_vector(args.x0, n)
    radii = [float(v) for v in args.radii.split(",")]
    table = equicontinuity_probe(family, x0, radii, cfg)
    report = {
        "command": "probe", "family": specs, "n": n,
        "x0": jsonable(x0),
        "radii": jsonable(table.radii),
        "sup_chordal": jsonable(table.sup_chordal),
        "per_map": jsonable(table.per_map),
    }
    curves = {"probe": (["s", "sup_chordal"],
                        [(float(s), float(v)) for s, v in
                         zip(table.radii, table.sup_chordal)])}

    def figures(outdir):
        from . import plots
        return plots.render_probe(table, outdir)

    _emit(args, report, curves, figures)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _usage_error(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ringinj",
        description="Injectivity radii and sharpness constructions for "
                    "ring Q-homeomorphisms")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="profile, divergence, growth and FMO "
                                       "classification of a field")
    p.add_argument("--q", required=True, help="field spec, e.g. const:4")
    p.add_argument("--n", type=int, required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("radius", help="injectivity radius lower bound")
    p.add_argument("--q", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=["canonical", "log_growth", "fmo"],
                   default="canonical")
    _add_common(p)
    p.set_defaults(fn=cmd_radius)

    p = sub.add_parser("sharp", help="non-injective construction for a "
                                     "convergent field")
    p.add_argument("--q", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--winding-order", type=int,
                   help="pin the winding order instead of the minimal "
                        "feasible one")
    p.add_argument("--axis-distance", type=float,
                   help="axis distance from the origin (> 1)")
    p.add_argument("--no-normalize-k", action="store_true",
                   help="keep the outer field undivided: ring (K Q)-map on "
                        "a larger domain")
    _add_common(p)
    p.set_defaults(fn=cmd_sharp)

    p = sub.add_parser("verify", help="ring inequality check for a stretch")
    p.add_argument("--map", required=True, help="map spec, e.g. stretch:const:8")
    p.add_argument("--q", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--r2", type=float, required=True)
    p.add_argument("--grid", type=int, default=1,
                   help="verify on a log grid of this many subintervals")
    _add_common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("kor", help="two-point dichotomy certificate")
    p.add_argument("--a", required=True, help="comma-separated coordinates")
    p.add_argument("--b", required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--t-count", type=int, default=64)
    _add_common(p)
    p.set_defaults(fn=cmd_kor)

    p = sub.add_parser("probe", help="equicontinuity probe for a map family")
    p.add_argument("--family", required=True,
                   help="comma-separated map specs")
    p.add_argument("--x0", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--radii", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_probe)
    return ap


_VECTOR_FLAGS = {"--a", "--b", "--x0", "--radii"}


def _merge_negative_vectors(argv):
    """Join '--b -1,0,0' into '--b=-1,0,0' so argparse keeps the value."""
    out = []
    skip = False
    for i, tok in enumerate(argv):
        if skip:
            skip = False
            continue
        if tok in _VECTOR_FLAGS and i + 1 < len(argv) \
                and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            skip = True
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(_merge_negative_vectors(
        sys.argv[1:] if argv is None else list(argv)))
    extra = {}
    if getattr(args, "winding_order", None) is not None:
        extra["winding_order"] = args.winding_order
    if getattr(args, "axis_distance", None) is not None:
        extra["axis_distance"] = args.axis_distance
    if getattr(args, "no_normalize_k", False):
        extra["normalize_by_K"] = False
    args._extra_cfg = extra
    try:
        return args.fn(args)
    except (ValueError, OSError, QuadratureError, UnsupportedMapError) as exc:
        return _usage_error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
