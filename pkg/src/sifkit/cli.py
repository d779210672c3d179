"""Command-line driver: refinement studies from a config file, CSV and
report emission, and small mesh utilities.

Config format (INI ``key = value``)::

    [run]
    problem       = power_crack    ; power_crack | arc_crack_manufactured
                                   ; | arc_crack_muskhelishvili
    element_order = 1              ; 1 | 2
    levels        = 4              ; >= 1
    variants      = uni_dfc, tan_dfc, tan_tf
    rho           = auto           ; support radius, or "auto"
    rho_sweep     = 0.7, 0.775, 0.85, 0.925, 1.0   ; fractions of rho
    output_dir    = out
    svg           = false          ; also write convergence.svg

    [material]
    young   = 1000
    poisson = 0.2
    plane   = strain               ; strain | stress

    [quadrature]
    volume_degree = 4
    edge_points   = 4

Every key is optional; the defaults above are the shipped benchmark setup.
Unknown sections, keys, and malformed values are rejected before anything
is solved or written.

Outputs in ``output_dir``: ``solution_level{L}.csv`` (per-node displacement;
vertex dofs only for quadratic elements), ``convergence.csv``,
``rho_sweep.csv``, ``report.txt``, and optionally ``convergence.svg``.
Numeric CSV cells carry 12 significant digits, so serial reruns of the same
config are byte-identical.

Exit codes: 0 success, 1 usage/config error, 2 check failure, 3 solver
failure.
"""

import argparse
import configparser
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bench import (ArcCrackProblem, ManufacturedProblem, arc_curve,
                    estimate_rate, power_curve, run_study)
from .elasticity import Material
from .meshing import MeshError, load_mesh, refine, save_mesh, validate_mesh
from .solver import SolverError

PROBLEMS = ("power_crack", "arc_crack_manufactured", "arc_crack_muskhelishvili")
VARIANTS = ("uni_dfc", "tan_dfc", "tan_tf")
FIT_WINDOW = 4          # least-squares rates use at most this many levels


class ConfigError(Exception):
    """Invalid or unreadable run configuration."""


@dataclass
class RunConfig:
    problem: str = "power_crack"
    element_order: int = 1
    levels: int = 4
    variants: tuple = VARIANTS
    rho: float = None               # None means "auto"
    rho_sweep: tuple = (0.7, 0.775, 0.85, 0.925, 1.0)
    output_dir: str = "out"
    svg: bool = False
    young: float = 1000.0
    poisson: float = 0.2
    plane: str = "strain"
    volume_degree: int = 4
    edge_points: int = 4


def _parse_floats(text):
    items = [t.strip() for t in text.split(",") if t.strip()]
    return tuple(float(t) for t in items)


def parse_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except configparser.Error as e:
        raise ConfigError(f"config syntax: {e}")

    known = {
        "run": {"problem", "element_order", "levels", "variants", "rho",
                "rho_sweep", "output_dir", "svg"},
        "material": {"young", "poisson", "plane"},
        "quadrature": {"volume_degree", "edge_points"},
    }
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
        extra = set(parser[section]) - known[section]
        if extra:
            raise ConfigError(
                f"unknown key {sorted(extra)[0]!r} in [{section}]")

    cfg = RunConfig()
    get = parser.get

    def read(section, key, cast, current):
        if parser.has_option(section, key):
            raw = get(section, key)
            try:
                return cast(raw)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({e})")
        return current

    cfg.problem = read("run", "problem", str, cfg.problem).strip()
    if cfg.problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {cfg.problem!r}; "
                          f"choose from {', '.join(PROBLEMS)}")
    cfg.element_order = read("run", "element_order", int, cfg.element_order)
    if cfg.element_order not in (1, 2):
        raise ConfigError("element_order must be 1 or 2")
    cfg.levels = read("run", "levels", int, cfg.levels)
    if cfg.levels < 1:
        raise ConfigError("levels must be >= 1")
    if parser.has_option("run", "variants"):
        names = tuple(t.strip() for t in get("run", "variants").split(",")
                      if t.strip())
        for name in names:
            if name not in VARIANTS:
                raise ConfigError(f"unknown variant {name!r}; "
                                  f"choose from {', '.join(VARIANTS)}")
        cfg.variants = names
    if parser.has_option("run", "rho"):
        raw = get("run", "rho").strip()
        if raw != "auto":
            try:
                cfg.rho = float(raw)
            except ValueError:
                raise ConfigError(f"rho must be a number or 'auto', got {raw!r}")
            if cfg.rho <= 0:
                raise ConfigError("rho must be positive")
    cfg.rho_sweep = read("run", "rho_sweep", _parse_floats, cfg.rho_sweep)
    for f_ in cfg.rho_sweep:
        if not 0.0 < f_ <= 1.0:
            raise ConfigError("rho_sweep fractions must lie in (0, 1]")
    cfg.output_dir = read("run", "output_dir", str, cfg.output_dir)
    if parser.has_option("run", "svg"):
        try:
            cfg.svg = parser.getboolean("run", "svg")
        except ValueError:
            raise ConfigError("svg must be a boolean")

    cfg.young = read("material", "young", float, cfg.young)
    cfg.poisson = read("material", "poisson", float, cfg.poisson)
    if not (cfg.young > 0 and -1.0 < cfg.poisson < 0.5):
        raise ConfigError("need young > 0 and -1 < poisson < 0.5")
    cfg.plane = read("material", "plane", str, cfg.plane).strip()
    if cfg.plane not in ("strain", "stress"):
        raise ConfigError("plane must be 'strain' or 'stress'")

    cfg.volume_degree = read("quadrature", "volume_degree", int,
                             cfg.volume_degree)
    if not 1 <= cfg.volume_degree <= 6:
        raise ConfigError("volume_degree must be in 1..6")
    cfg.edge_points = read("quadrature", "edge_points", int, cfg.edge_points)
    if not 1 <= cfg.edge_points <= 16:
        raise ConfigError("edge_points must be in 1..16")
    return cfg


def build_problem(cfg: RunConfig):
    mat = Material.from_engineering(young=cfg.young, poisson=cfg.poisson,
                                    plane=cfg.plane)
    if cfg.problem == "power_crack":
        return ManufacturedProblem(power_curve(), mat)
    if cfg.problem == "arc_crack_manufactured":
        return ManufacturedProblem(arc_curve(), mat)
    return ArcCrackProblem(tier="muskhelishvili", material=mat)


# ---------------------------------------------------------------------------
# output files


def _fmt(v):
    return "" if v is None else f"{v:.12g}"


def _write_solution_csv(outdir: Path, record, mesh, sol):
    n = len(mesh.nodes)
    side = mesh.node_side()
    path = outdir / f"solution_level{record.level}.csv"
    with open(path, "w") as f:
        f.write("node,x,y,side,u_x,u_y\n")
        for i in range(n):
            f.write(f"{i},{_fmt(mesh.nodes[i, 0])},{_fmt(mesh.nodes[i, 1])},"
                    f"{int(side[i])},{_fmt(sol.u[i, 0])},{_fmt(sol.u[i, 1])}\n")


def _dyadic_rates(values):
    """Per-level halving rates aligned with the rows: None for level 0."""
    out = [None]
    for a, b in zip(values[:-1], values[1:]):
        if a is None or b is None or a <= 0 or b <= 0:
            out.append(None)
        else:
            out.append(float(np.log2(a / b)))
    return out


def _write_convergence_csv(outdir: Path, study):
    header = ["level", "h", "err_interior", "rate_interior",
              "err_crackface", "rate_crackface"]
    for v in study.variants:
        for m in ("I", "II"):
            header += [f"K_{m}_{v}", f"relerr_{m}_{v}", f"rate_{m}_{v}"]
    ei = [rec.err_interior for rec in study.levels]
    ec = [rec.err_crackface for rec in study.levels]
    ri = _dyadic_rates(ei)
    rc = _dyadic_rates(ec)
    cols = {}
    for v in study.variants:
        for m in ("I", "II"):
            ks = list(study.sif_values(v, m))
            errs = list(study.sif_errors(v, m))
            cols[v, m] = (ks, errs, _dyadic_rates(errs))
    with open(outdir / "convergence.csv", "w") as f:
        f.write(",".join(header) + "\n")
        for i, rec in enumerate(study.levels):
            row = [str(rec.level), _fmt(rec.h), _fmt(ei[i]), _fmt(ri[i]),
                   _fmt(ec[i]), _fmt(rc[i])]
            for v in study.variants:
                for m in ("I", "II"):
                    ks, errs, rates = cols[v, m]
                    row += [_fmt(ks[i]), _fmt(errs[i]), _fmt(rates[i])]
            f.write(",".join(row) + "\n")


def _write_sweep_csv(outdir: Path, study):
    with open(outdir / "rho_sweep.csv", "w") as f:
        f.write("rho,variant,K_I,K_II\n")
        for rho, variant, k1, k2 in study.sweep:
            f.write(f"{_fmt(rho)},{variant},{_fmt(k1)},{_fmt(k2)}\n")


def _ls_rate(hs, errs):
    errs = np.asarray(errs, dtype=float)
    if len(errs) < 2 or np.any(errs <= 0):
        return None
    w = slice(max(0, len(errs) - FIT_WINDOW), None)
    return estimate_rate(np.asarray(hs)[w], errs[w])[0]


def check_study(study, cfg: RunConfig):
    """Threshold checks; returns (lines, all_ok)."""
    lines = []
    ok = True

    def judge(passed, text):
        nonlocal ok
        ok = ok and bool(passed)
        lines.append(("PASS " if passed else "FAIL ") + text)

    hs = study.h_values()
    has_ref = study.levels[0].err_interior is not None
    if has_ref and len(study.levels) >= 2:
        ri = _ls_rate(hs, [r.err_interior for r in study.levels])
        judge(ri is not None and 0.4 <= ri <= 0.6,
              f"interior strain rate {ri:.3f} in [0.40, 0.60]")
        rc = _ls_rate(hs, [r.err_crackface for r in study.levels])
        judge(rc is not None and 0.35 <= rc <= 0.65,
              f"crack-face strain rate {rc:.3f} in [0.35, 0.65]")
    for v in study.variants:
        for m in ("I", "II"):
            errs = study.sif_errors(v, m)
            judge(errs[-1] <= 0.02,
                  f"{v} K_{m} final relative error {errs[-1]:.2e} <= 2e-02")
            if len(errs) >= 2:
                rate = _ls_rate(hs, np.maximum(errs, 1e-16))
                judge(rate is not None and rate >= 0.8,
                      f"{v} K_{m} error rate {rate:.3f} >= 0.80")
    if study.sweep:
        for v in study.variants:
            rows = [row for row in study.sweep if row[1] == v]
            for m, col in (("I", 2), ("II", 3)):
                ks = np.array([row[col] for row in rows])
                spread = (ks.max() - ks.min()) / abs(ks.mean())
                judge(spread <= 0.01,
                      f"{v} K_{m} support-sweep spread {spread:.2e} <= 1e-02")
    return lines, ok


def _write_report(outdir: Path, cfg: RunConfig, study, check_lines=None):
    L = []
    L.append(f"problem:        {cfg.problem}")
    L.append(f"element order:  P{cfg.element_order}")
    L.append(f"levels:         {cfg.levels}")
    L.append(f"support radius: {study.rho:.6g}")
    L.append(f"variants:       {', '.join(study.variants) or '(none)'}")
    L.append(f"material:       young={cfg.young:g} poisson={cfg.poisson:g} "
             f"plane={cfg.plane}")
    k1e, k2e = study.exact_sif
    L.append(f"exact factors:  K_I={k1e:.6g} K_II={k2e:.6g}")
    L.append("")
    has_ref = study.levels[0].err_interior is not None
    if has_ref:
        L.append("level      h  triangles  err_interior  rate  "
                 "err_crackface  rate")
        ei = [r.err_interior for r in study.levels]
        ec = [r.err_crackface for r in study.levels]
        ri, rc = _dyadic_rates(ei), _dyadic_rates(ec)
        for i, rec in enumerate(study.levels):
            L.append(f"{rec.level:>5d}  {rec.h:.3f}  {rec.n_triangles:>9d}  "
                     f"{ei[i]:>12.4e}  {'-' if ri[i] is None else format(ri[i], '.2f'):>4s}  "
                     f"{ec[i]:>13.4e}  {'-' if rc[i] is None else format(rc[i], '.2f'):>4s}")
        hs = study.h_values()
        lsi = _ls_rate(hs, ei)
        lsc = _ls_rate(hs, ec)
        if lsi is not None:
            L.append(f"least-squares rates (last {min(len(ei), FIT_WINDOW)} "
                     f"levels): interior {lsi:.3f}, crack face {lsc:.3f}")
    else:
        L.append("level      h  triangles")
        for rec in study.levels:
            L.append(f"{rec.level:>5d}  {rec.h:.3f}  {rec.n_triangles:>9d}")
    L.append("")
    if study.variants:
        L.append("factors at the finest level:")
        L.append("variant   mode  K             relerr      LS rate")
        hs = study.h_values()
        for v in study.variants:
            for m in ("I", "II"):
                k = study.sif_values(v, m)[-1]
                errs = study.sif_errors(v, m)
                rate = _ls_rate(hs, np.maximum(errs, 1e-16))
                rtxt = "-" if rate is None else f"{rate:.3f}"
                L.append(f"{v:<9s} {m:<4s}  {k:<12.8f}  {errs[-1]:.2e}  {rtxt}")
        L.append("")
    if study.sweep:
        L.append("support sweep at the finest level:")
        L.append("rho       variant   K_I           K_II")
        for rho, variant, k1, k2 in study.sweep:
            L.append(f"{rho:<8.4f}  {variant:<8s}  {k1:<12.8f}  {k2:<12.8f}")
        L.append("")
    if check_lines is not None:
        L.append("checks:")
        L.extend("  " + line for line in check_lines)
        L.append("")
    with open(outdir / "report.txt", "w") as f:
        f.write("\n".join(L) + "\n")
    return L


# ---------------------------------------------------------------------------
# minimal SVG chart


def _svg_loglog(path, series, xlabel, ylabel):
    """Log-log polyline chart without plotting dependencies.

    ``series`` is a list of (label, xs, ys) with positive entries.
    """
    W, H, ML, MR, MT, MB = 480, 360, 60, 130, 20, 45
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], dtype=float) for s in series])
    lx0, lx1 = np.log10(xs_all.min()), np.log10(xs_all.max())
    ly0, ly1 = np.log10(ys_all.min()), np.log10(ys_all.max())
    lx0, lx1 = lx0 - 0.05, lx1 + 0.05
    ly0, ly1 = ly0 - 0.1, ly1 + 0.1

    def px(x):
        return ML + (np.log10(x) - lx0) / (lx1 - lx0) * (W - ML - MR)

    def py(y):
        return H - MB - (np.log10(y) - ly0) / (ly1 - ly0) * (H - MT - MB)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
              "#8c564b"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="monospace" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{ML}" y="{MT}" width="{W-ML-MR}" height="{H-MT-MB}" '
           f'fill="none" stroke="black"/>']
    for d in range(int(np.floor(lx0)), int(np.ceil(lx1)) + 1):
        x = 10.0 ** d
        if lx0 <= d <= lx1:
            out.append(f'<line x1="{px(x):.1f}" y1="{H-MB}" x2="{px(x):.1f}" '
                       f'y2="{H-MB+4}" stroke="black"/>')
            out.append(f'<text x="{px(x):.1f}" y="{H-MB+16}" '
                       f'text-anchor="middle">1e{d}</text>')
    for d in range(int(np.floor(ly0)), int(np.ceil(ly1)) + 1):
        y = 10.0 ** d
        if ly0 <= d <= ly1:
            out.append(f'<line x1="{ML-4}" y1="{py(y):.1f}" x2="{ML}" '
                       f'y2="{py(y):.1f}" stroke="black"/>')
            out.append(f'<text x="{ML-6}" y="{py(y)+4:.1f}" '
                       f'text-anchor="end">1e{d}</text>')
    out.append(f'<text x="{(ML+W-MR)/2:.0f}" y="{H-8}" '
               f'text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{(MT+H-MB)/2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {(MT+H-MB)/2:.0f})">{ylabel}</text>')
    for k, (label, xs, ys) in enumerate(series):
        c = colors[k % len(colors)]
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" '
                   f'stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="2.5" '
                       f'fill="{c}"/>')
        out.append(f'<text x="{W-MR+8}" y="{MT+14+14*k}" fill="{c}">'
                   f'{label}</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


def _write_svg(outdir: Path, study):
    series = []
    if study.levels[0].err_interior is not None:
        hs = study.h_values()
        series.append(("interior", hs,
                       [r.err_interior for r in study.levels]))
        series.append(("crack face", hs,
                       [r.err_crackface for r in study.levels]))
        for v in study.variants:
            errs = np.maximum(study.sif_errors(v, "I"), 1e-16)
            series.append((f"K_I {v}", hs, errs))
    if not series:
        return
    _svg_loglog(outdir / "convergence.svg", series, "h", "error")


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args):
    try:
        cfg = parse_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    problem = build_problem(cfg)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        study = run_study(
            problem, order=cfg.element_order, levels=cfg.levels,
            variants=cfg.variants, rho=cfg.rho,
            rho_fractions=cfg.rho_sweep,
            volume_degree=cfg.volume_degree, edge_points=cfg.edge_points,
            on_level=lambda rec, mesh, sol: _write_solution_csv(
                outdir, rec, mesh, sol))
    except (MeshError, SolverError, np.linalg.LinAlgError) as e:
        print(f"solver error: {e}", file=sys.stderr)
        return 3
    _write_convergence_csv(outdir, study)
    _write_sweep_csv(outdir, study)
    check_lines = None
    ok = True
    if args.check:
        check_lines, ok = check_study(study, cfg)
    report = _write_report(outdir, cfg, study, check_lines)
    if cfg.svg:
        _write_svg(outdir, study)
    print("\n".join(report))
    if args.check:
        print("check: " + ("PASS" if ok else "FAIL"))
        return 0 if ok else 2
    return 0


def cmd_mesh_validate(args):
    try:
        mesh = load_mesh(args.file)
        validate_mesh(mesh)
    except OSError as e:
        print(f"cannot read mesh: {e}", file=sys.stderr)
        return 1
    except MeshError as e:
        print(f"invalid mesh: {e}", file=sys.stderr)
        return 2
    print(f"ok: {len(mesh.nodes)} nodes, {len(mesh.triangles)} triangles, "
          f"{len(mesh.pairs)} duplicated pairs, h_max {mesh.h_max():.6g}")
    return 0


def cmd_mesh_refine(args):
    if args.levels < 1:
        print("levels must be >= 1", file=sys.stderr)
        return 1
    try:
        mesh = load_mesh(args.file)
        validate_mesh(mesh)
        for _ in range(args.levels):
            mesh = refine(mesh)
    except OSError as e:
        print(f"cannot read mesh: {e}", file=sys.stderr)
        return 1
    except MeshError as e:
        print(f"invalid mesh: {e}", file=sys.stderr)
        return 2
    src = Path(args.file)
    out = Path(args.output) if args.output else src.with_name(
        src.stem + f"_r{args.levels}" + src.suffix)
    save_mesh(mesh, out)
    print(f"wrote {out}: {len(mesh.nodes)} nodes, "
          f"{len(mesh.triangles)} triangles, h_max {mesh.h_max():.6g}")
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; here 2 means a failed
    threshold check, so usage problems are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def main(argv=None):
    ap = _Parser(
        prog="sifkit",
        description="Stress intensity factors for curved cracks: refinement "
                    "studies, factor extraction, and mesh utilities.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a refinement study from a config")
    p_run.add_argument("config")
    p_run.add_argument("--check", action="store_true",
                       help="verify rate/error/spread thresholds; exit 2 on "
                            "failure")
    p_run.set_defaults(func=cmd_run, check=False)

    p_check = sub.add_parser("check",
                             help="run a study and verify thresholds")
    p_check.add_argument("config")
    p_check.set_defaults(func=cmd_run, check=True)

    p_mesh = sub.add_parser("mesh", help="mesh utilities")
    mesh_sub = p_mesh.add_subparsers(dest="mesh_command", required=True)
    p_val = mesh_sub.add_parser("validate", help="validate a mesh file")
    p_val.add_argument("file")
    p_val.set_defaults(func=cmd_mesh_validate)
    p_ref = mesh_sub.add_parser("refine", help="refine a mesh file")
    p_ref.add_argument("file")
    p_ref.add_argument("-n", "--levels", type=int, default=1)
    p_ref.add_argument("-o", "--output", default=None)
    p_ref.set_defaults(func=cmd_mesh_refine)

    args = ap.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
