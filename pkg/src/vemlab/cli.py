"""Command-line front end: mesh generation, solves, sweeps, interpolation checks.

Every output file embeds the resolved run configuration and the package
version in a leading comment line, so identical invocations produce
identical bytes.  Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .mesh import (GeometryError, MeshFormatError, collapse_mesh,
                   generate_collapsing_quad, generate_square_mesh, load_mesh,
                   regular_polygon, save_mesh, unit_square)
from .oracle import OracleConfig, OracleError
from .solver import (ProblemSpec, SolverError, assemble, h1_projection_error,
                     mms_poly, mms_sinsin, run_convergence_study, solve)
from .space import SpaceKind, conforming, enhanced, nonconforming
from .stab import StabKind
from .stabilitylab import (StabilityLabError, collapse_sweep, h_sweep,
                           interp_bound_check, p_sweep,
                           quasi_optimality_check, reports_to_csv)

SPACE_BUILDERS = {"conf": conforming, "enh": enhanced, "nonconf": nonconforming}
STAB_KINDS = {"dofi": StabKind.DOFI_DOFI, "proj": StabKind.PROJECTED}


def _config_line(cfg: dict) -> str:
    return f"# vemlab {__version__} config=" + json.dumps(cfg, sort_keys=True)


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _parse_mms(text: str):
    if text == "sinsin":
        return mms_sinsin()
    if text.startswith("poly:"):
        try:
            deg = int(text.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad mms spec {text!r}")
        if deg < 0:
            raise argparse.ArgumentTypeError("poly degree must be >= 0")
        return mms_poly(deg)
    raise argparse.ArgumentTypeError(f"unknown mms {text!r} (sinsin or poly:<deg>)")


def _parse_geom(text: str):
    if text == "square":
        return "square", unit_square()
    if text == "pentagon":
        return "pentagon", regular_polygon(5)
    if text.startswith("collapse:"):
        try:
            eps = float(text.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad geometry spec {text!r}")
        if not 0.0 < eps <= 1.0:
            raise argparse.ArgumentTypeError("collapse eps must lie in (0, 1]")
        return f"collapse:{eps:g}", generate_collapsing_quad(eps)
    raise argparse.ArgumentTypeError(
        f"unknown geometry {text!r} (square, pentagon or collapse:<eps>)")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="vemlab",
        description="Polygonal virtual element solver and stability laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    leaves = {}

    mesh_p = sub.add_parser("mesh", help="mesh file operations")
    mesh_sub = mesh_p.add_subparsers(dest="mesh_command", required=True)
    gen = mesh_sub.add_parser("gen", help="generate a mesh file")
    gen.add_argument("--kind", choices=["square", "collapse"], required=True)
    gen.add_argument("--n", type=int, help="cells per side (square kind)")
    gen.add_argument("--eps", type=float, help="collapse parameter in (0, 1]")
    gen.add_argument("--domain", type=float, nargs=4,
                     metavar=("X0", "Y0", "X1", "Y1"),
                     default=[0.0, 0.0, 1.0, 1.0])
    gen.add_argument("--out", required=True)
    gen.add_argument("--config", help="JSON file or literal with default flags")
    gen.set_defaults(func=cmd_mesh_gen)
    leaves["mesh gen"] = gen

    solve_p = sub.add_parser("solve", help="manufactured-solution Poisson solve")
    solve_p.add_argument("--mesh", help="mesh JSON path")
    solve_p.add_argument("--n", type=int, help="generate an n-by-n square mesh")
    solve_p.add_argument("--space", choices=sorted(SPACE_BUILDERS), default="conf")
    solve_p.add_argument("--stab", choices=sorted(STAB_KINDS), default="dofi")
    solve_p.add_argument("--p", type=int, default=1)
    solve_p.add_argument("--mms", default="sinsin", help="sinsin or poly:<deg>")
    solve_p.add_argument("--method", choices=["direct", "cg"], default="direct")
    solve_p.add_argument("--tol", type=float, default=1e-12)
    solve_p.add_argument("--out", help="CSV output path")
    solve_p.add_argument("--summary", help="JSON summary path")
    solve_p.add_argument("--config")
    solve_p.set_defaults(func=cmd_solve)
    leaves["solve"] = solve_p

    conv = sub.add_parser("converge", help="mesh-refinement convergence study")
    conv.add_argument("--p", type=int, default=1)
    conv.add_argument("--levels", type=int, default=4,
                      help="number of meshes n = 4*2^i")
    conv.add_argument("--space", choices=sorted(SPACE_BUILDERS), default="conf")
    conv.add_argument("--stab", choices=sorted(STAB_KINDS), default="proj")
    conv.add_argument("--mms", default="sinsin")
    conv.add_argument("--out", help="CSV output path")
    conv.add_argument("--config")
    conv.set_defaults(func=cmd_converge)
    leaves["converge"] = conv

    stab_p = sub.add_parser("stab", help="stability-constant sweeps")
    stab_p.add_argument("--sweep", choices=["h", "p", "collapse"], required=True)
    stab_p.add_argument("--space", choices=sorted(SPACE_BUILDERS), default="conf")
    stab_p.add_argument("--stab", choices=sorted(STAB_KINDS), default="dofi")
    stab_p.add_argument("--p", type=int, default=2)
    stab_p.add_argument("--pmax", type=int, default=6)
    stab_p.add_argument("--eps-min", type=float, default=1e-5)
    stab_p.add_argument("--level", type=int, default=4, help="oracle level")
    stab_p.add_argument("--out", help="CSV output path")
    stab_p.add_argument("--config")
    stab_p.set_defaults(func=cmd_stab)
    leaves["stab"] = stab_p

    interp = sub.add_parser("interp", help="interpolation bound checks")
    interp.add_argument("--p", type=int, default=2)
    interp.add_argument("--v", choices=["sinsin", "exp"], default="sinsin")
    interp.add_argument("--geom", default="square",
                        help="square, pentagon or collapse:<eps>")
    interp.add_argument("--stab", choices=sorted(STAB_KINDS), default="dofi")
    interp.add_argument("--level", type=int, default=4, help="oracle level")
    interp.add_argument("--out", help="CSV output path")
    interp.add_argument("--config")
    interp.set_defaults(func=cmd_interp)
    leaves["interp"] = interp

    return parser, leaves


def _load_config_defaults(parser, leaves, argv):
    """--config JSON supplies defaults; explicit flags still win."""
    args = parser.parse_args(argv)
    text = getattr(args, "config", None)
    if not text:
        return args
    try:
        raw = text.strip()
        if raw.startswith("{"):
            cfg = json.loads(raw)
        else:
            with open(text, encoding="utf-8") as f:
                cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read --config: {exc}")
    key = args.command if args.command != "mesh" else "mesh gen"
    leaf = leaves[key]
    allowed = {a.dest for a in leaf._actions}
    bad = set(cfg) - allowed
    if bad:
        parser.error(f"unknown config keys: {sorted(bad)}")
    leaf.set_defaults(**cfg)
    return parser.parse_args(argv)


def cmd_mesh_gen(args, parser) -> int:
    if args.kind == "square":
        if args.n is None or args.n < 1:
            parser.error("--kind square requires --n >= 1")
        mesh = generate_square_mesh(args.n, tuple(args.domain))
    else:
        if args.eps is None or not 0.0 < args.eps <= 1.0:
            parser.error("--kind collapse requires --eps in (0, 1]")
        mesh = collapse_mesh(args.eps)
    save_mesh(mesh, args.out)
    print(f"wrote {args.out}: {len(mesh.cells)} cells, "
          f"{len(mesh.vertices)} vertices")
    return 0


def cmd_solve(args, parser) -> int:
    if (args.mesh is None) == (args.n is None):
        parser.error("provide exactly one of --mesh or --n")
    if args.p < 1:
        parser.error("--p must be >= 1")
    try:
        mms = _parse_mms(args.mms)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    mesh = load_mesh(args.mesh) if args.mesh else generate_square_mesh(args.n)
    kind = SPACE_BUILDERS[args.space](args.p)
    spec = ProblemSpec(kind, STAB_KINDS[args.stab], mms)
    system = assemble(mesh, spec)
    if system.max_gram_cond > 1e12:
        print(f"warning: projector Gram condition {system.max_gram_cond:.3e}",
              file=sys.stderr)
    result = solve(system, method=args.method, tol=args.tol)
    _, err = h1_projection_error(result, mms.grad)

    cfg = {"space": args.space, "stab": args.stab, "p": args.p,
           "mms": args.mms, "method": args.method, "tol": args.tol,
           "mesh": args.mesh or f"square:{args.n}"}
    print(f"cells={len(mesh.cells)} n_dof={result.n_dof} "
          f"err_h1_proj={err:.6e} residual={result.residual:.3e}")
    if args.out:
        lines = [_config_line(cfg),
                 "n_cells,n_dof,h_max,err_h1_proj,residual,method",
                 f"{len(mesh.cells)},{result.n_dof},{mesh.max_diameter():.17g},"
                 f"{err:.17g},{result.residual:.17g},{args.method}"]
        _write_text(args.out, "\n".join(lines) + "\n")
    if args.summary:
        summary = dict(cfg, n_cells=len(mesh.cells), n_dof=result.n_dof,
                       err_h1_proj=err, residual=result.residual,
                       version=__version__)
        _write_text(args.summary, json.dumps(summary, sort_keys=True) + "\n")
    return 0


def cmd_converge(args, parser) -> int:
    if args.p < 1:
        parser.error("--p must be >= 1")
    if args.levels < 2:
        parser.error("--levels must be >= 2")
    try:
        mms = _parse_mms(args.mms)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    kind = SPACE_BUILDERS[args.space](args.p)
    spec = ProblemSpec(kind, STAB_KINDS[args.stab], mms)
    ns = [4 * 2 ** i for i in range(args.levels)]
    rows = run_convergence_study(spec, ns)
    cfg = {"space": args.space, "stab": args.stab, "p": args.p,
           "mms": args.mms, "levels": args.levels}
    lines = [_config_line(cfg), "n,h_max,n_dof,err_h1_proj,rate"]
    for r in rows:
        rate = "" if math.isnan(r.rate) else f"{r.rate:.17g}"
        lines.append(f"{r.n},{r.h_max:.17g},{r.n_dof},{r.err:.17g},{rate}")
        shown = rate and f"{r.rate:.3f}" or "-"
        print(f"n={r.n:4d} n_dof={r.n_dof:7d} err={r.err:.6e} rate={shown}")
    if args.out:
        _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_stab(args, parser) -> int:
    if args.space == "enh":
        parser.error("stability sweeps need an oracle; use conf or nonconf")
    family = SPACE_BUILDERS[args.space]
    stab_kind = STAB_KINDS[args.stab]
    config = OracleConfig(level=args.level)
    if args.sweep == "h":
        if args.p < 1:
            parser.error("--p must be >= 1")
        rows = h_sweep(family(args.p), stab_kind, config=config)
    elif args.sweep == "p":
        if args.pmax < 1:
            parser.error("--pmax must be >= 1")
        rows = p_sweep(family, stab_kind, range(1, args.pmax + 1), config=config)
    else:
        if not 0.0 < args.eps_min < 1.0:
            parser.error("--eps-min must lie in (0, 1)")
        n_steps = max(1, int(round(-math.log10(args.eps_min))))
        eps_range = [10.0 ** (-i) for i in range(n_steps + 1)]
        rows = collapse_sweep(eps_range, family(args.p), stab_kind, config)
    cfg = {"sweep": args.sweep, "space": args.space, "stab": args.stab,
           "p": args.p, "pmax": args.pmax, "eps_min": args.eps_min,
           "level": args.level}
    text = reports_to_csv(rows, _config_line(cfg))
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)
    n_bad = sum(not r.ok for r in rows)
    if n_bad:
        print(f"warning: {n_bad} of {len(rows)} rows failed the oracle",
              file=sys.stderr)
    return 1 if n_bad == len(rows) else 0


def cmd_interp(args, parser) -> int:
    if args.p < 1:
        parser.error("--p must be >= 1")
    try:
        tag, poly = _parse_geom(args.geom)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    funcs = {"sinsin": lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
             "exp": lambda x, y: np.exp(x + y)}
    v = funcs[args.v]
    config = OracleConfig(level=args.level)
    ib = interp_bound_check(poly, args.p, v, STAB_KINDS[args.stab], config=config)
    qo = quasi_optimality_check(poly, args.p, v, config=config)
    ok_ib, ok_qo = ib.passed(), qo.passed()
    print(f"interp-bound   geom={tag} v={args.v} p={args.p}: "
          f"lhs={ib.lhs:.6e} rhs={ib.rhs:.6e} "
          f"stab_ratio={ib.alpha_sup / ib.alpha_star:.4f} "
          f"{'pass' if ok_ib else 'FAIL'}")
    print(f"quasi-optimal  geom={tag} v={args.v} p={args.p}: "
          f"lhs={qo.lhs:.6e} best={qo.best_err:.6e} "
          f"{'pass' if ok_qo else 'FAIL'}")
    if args.out:
        cfg = {"p": args.p, "v": args.v, "geom": args.geom,
               "stab": args.stab, "level": args.level}
        lines = [_config_line(cfg), "check,geom,v,p,lhs,rhs,passed",
                 f"interp_bound,{tag},{args.v},{args.p},{ib.lhs:.17g},"
                 f"{ib.rhs:.17g},{ok_ib}",
                 f"quasi_optimality,{tag},{args.v},{args.p},{qo.lhs:.17g},"
                 f"{qo.best_err:.17g},{ok_qo}"]
        _write_text(args.out, "\n".join(lines) + "\n")
    return 0 if ok_ib and ok_qo else 1


def main(argv=None) -> int:
    parser, leaves = build_parser()
    args = _load_config_defaults(parser, leaves, argv)
    try:
        return args.func(args, parser)
    except (MeshFormatError, GeometryError, SolverError, OracleError,
            StabilityLabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
