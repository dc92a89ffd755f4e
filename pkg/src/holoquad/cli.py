"""Command-line front end.

``holoquad classify|tree|map|modulus|sweep|verify --config PATH [--out PREFIX]
[--format csv|jsonl] [--svg]``

Exit codes: 0 ok, 1 configuration error, 2 domain error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from . import svg
from .config import FORMATS, RunConfig, load_config
from .errors import ConfigError, DomainError, HoloquadError
from .geometry import intersections
from .gradtree import JUNCTIONS, build_tree
from .harness import boundary_collision_check, sup_error_report
from .modulus import modulus_of_quad
from .scmap import METHODS, dispatch_region, evaluate, solve_prevertex

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3
SWEEP_COLUMNS = ("epsilon", "z4", "modulus", "l_estimate", "sup_err_e1", "sup_err_e2",
                 "sup_err_e3", "sup_err_e4", "sup_err_int", "sup_err_vertex")
DEFAULT_PREFIX = "holoquad"
_SUBSCRIPTS = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")


def fmt(v) -> str:
    """Fixed 17-significant-digit formatting for reports."""
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    return f"{float(v):.17g}"


def _ordering_text(label: str) -> str:
    order = label.split("; ")[-1]
    out, prev = [], ""
    for ch in order:
        out.append(ch.translate(_SUBSCRIPTS) if prev == "p" or (prev.isdigit() and ch.isdigit()) else ch)
        prev = ch
    return "".join(out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", required=True, help="path to the run configuration")
    p.add_argument("--out", help="output path prefix (default: config 'output' or stdout)")
    p.add_argument("--format", choices=FORMATS, help="report format for tabular output")
    p.add_argument("--svg", action="store_true", help="also write SVG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holoquad", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "classify": "match the sections against the configuration table",
        "tree": "build the gradient tree",
        "map": "evaluate the conformal map at one point",
        "modulus": "conformal modulus with its reciprocal and area/width bracket",
        "sweep": "eps sweep with sup-norm errors per region",
        "verify": "self-checks for one configuration",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _add_common(p)
        if name == "map":
            p.add_argument("--z", required=True, help="point, e.g. 0.3+0.2j, 0.5, inf")
            p.add_argument("--method", default="auto",
                           help="comma-separated subset of " + ",".join(METHODS))
    return parser


# ------------------------------------------------------------------ subcommands

def cmd_classify(cfg: RunConfig, args, out) -> int:
    cls = build_tree(cfg.sections()).classification
    print(f"row: {_ordering_text(cls.row_label)}; shape: ({cls.tree_shape}); "
          f"degenerate_axis: {cls.degenerate_axis}", file=out)
    print(f"table_row: {cls.table_row}", file=out)
    print(f"slopes: {cls.row_label.split('; ')[0]}", file=out)
    print(f"generic: {str(cls.generic).lower()}", file=out)
    print(f"parallel a1=a3: {str(cls.parallel_pairs[0]).lower()}; "
          f"parallel a2=a4: {str(cls.parallel_pairs[1]).lower()}", file=out)
    return EXIT_OK


def cmd_tree(cfg: RunConfig, args, out) -> int:
    sections = cfg.sections()
    tree = build_tree(sections)
    print(f"shape: ({tree.shape})", file=out)
    print("p: " + ", ".join(fmt(v) for v in tree.p), file=out)
    print("index-zero: " + ", ".join(f"p{i + 1}" for i, m in enumerate(tree.minima) if m), file=out)
    for group in JUNCTIONS[tree.shape]:
        print(f"junction {group}: {fmt(tree.external(group[0]).start)}", file=out)
    for e in tree.edges:
        name = "internal" if e.kind == "internal" else f"e{e.index}"
        print(f"{name}: f{e.rig}-f{e.lef} da={fmt(e.delta_a)} db={fmt(e.delta_b)} "
              f"start={fmt(e.start)} end={fmt(e.end)}", file=out)
    if tree.internal_length is not None:
        print(f"internal_length: {fmt(tree.internal_length)}", file=out)
    if args.svg or cfg.emit_svg:
        geom = intersections(sections, cfg.epsilon)
        path = svg.write(f"{_prefix(cfg, args)}_quad.svg",
                         svg.quad_and_tree(geom, tree, f"quadrilateral and tree, eps={cfg.epsilon:g}"))
        print(f"svg: {path}", file=out)
    return EXIT_OK


def _parse_point(text: str) -> complex:
    t = text.strip().lower().replace(" ", "")
    if t in ("inf", "infinity", "oo"):
        return complex(math.inf, 0.0)
    try:
        return complex(t.replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot read point {text!r}") from exc


def cmd_map(cfg: RunConfig, args, out) -> int:
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise ConfigError(f"unknown method(s) {bad}; choose from {METHODS}")
    z = _parse_point(args.z)
    if z.imag < 0:
        raise DomainError("z must lie in the closed upper half plane")
    m = solve_prevertex(intersections(cfg.sections(), cfg.epsilon))
    print(f"epsilon: {fmt(cfg.epsilon)}", file=out)
    print(f"z4: {fmt(m.z4)} (log z4 = {fmt(m.log_z4)}, frame {m.frame})", file=out)
    vals = []
    for meth in methods:
        w = complex(evaluate(m, z, meth))
        vals.append(w)
        print(f"w[{meth}]: {fmt(w)}", file=out)
        print(f"region[{meth}]: {dispatch_region(m, z, meth)}", file=out)
    if len(vals) > 1:
        print(f"max difference: {fmt(max(abs(a - b) for a in vals for b in vals))}", file=out)
    return EXIT_OK


def cmd_modulus(cfg: RunConfig, args, out) -> int:
    geom = intersections(cfg.sections(), cfg.epsilon)
    r0 = modulus_of_quad(geom, 0)
    r1 = modulus_of_quad(geom, 1)
    print(f"epsilon: {fmt(cfg.epsilon)}", file=out)
    print(f"M(x1,x2,x3,x4): {fmt(r0.M)}", file=out)
    print(f"M(x2,x3,x4,x1): {fmt(r1.M)}", file=out)
    print(f"product: {fmt(r0.M * r1.M)}", file=out)
    print(f"xi: {fmt(r0.xi)} (log xi = {fmt(r0.log_xi)})", file=out)
    print(f"bracket: [{fmt(r0.rengel_lo)}, {fmt(r0.rengel_hi)}]", file=out)
    return EXIT_OK


def _prefix(cfg: RunConfig, args) -> str:
    return args.out or cfg.output or DEFAULT_PREFIX


def _row(rec) -> dict:
    e = rec.sup_errors
    return {"epsilon": rec.epsilon, "z4": rec.z4, "modulus": rec.modulus,
            "l_estimate": rec.l_estimate,
            **{f"sup_err_e{i}": e[f"e{i}"] for i in range(1, 5)},
            "sup_err_int": e.get("int", math.nan), "sup_err_vertex": rec.sup_err_vertex}


def _jsonl_line(row: dict) -> str:
    parts = []
    for k in SWEEP_COLUMNS:
        v = row[k]
        parts.append(f'"{k}": ' + ("null" if not math.isfinite(v) else fmt(v)))
    return "{" + ", ".join(parts) + "}\n"


def cmd_sweep(cfg: RunConfig, args, out) -> int:
    sections = cfg.sections()
    build_tree(sections)
    form = args.format or cfg.format
    prefix = args.out or cfg.output
    handle = open(f"{prefix}.{form}", "w", newline="", encoding="utf-8") if prefix else out
    records = []
    try:
        writer = csv.writer(handle, lineterminator="\n") if form == "csv" else None
        if writer:
            writer.writerow(SWEEP_COLUMNS)
            handle.flush()
        for eps in cfg.epsilons:
            rec = sup_error_report(sections, eps, cfg.delta, cfg.grid, check_grid=False)
            records.append(rec)
            row = _row(rec)
            if writer:
                writer.writerow([fmt(row[k]) for k in SWEEP_COLUMNS])
            else:
                handle.write(_jsonl_line(row))
            handle.flush()
    finally:
        if prefix:
            handle.close()
    if prefix:
        print(f"wrote {prefix}.{form}", file=sys.stderr)
    if args.svg or cfg.emit_svg:
        geom = intersections(sections, cfg.epsilons[0])
        for p in svg.sweep_figures(_prefix(cfg, args), geom, build_tree(sections), records):
            print(f"svg: {p}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args, out) -> int:
    sections = cfg.sections()
    tree = build_tree(sections)
    results = []

    def check(name, ok, detail):
        results.append(ok)
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=out)

    for eps in cfg.epsilons:
        geom = intersections(sections, eps)
        m = solve_prevertex(geom)
        work = geom.rotated(m.frame) if m.frame else geom
        err = float(np.max(np.abs(m.core.vertex_images() - work.vertices)))
        check(f"vertices eps={eps:g}", err <= 1e-8 * geom.diameter, f"max error {err:.3e}")
    geom = intersections(sections, cfg.epsilon)
    r0, r1 = modulus_of_quad(geom, 0), modulus_of_quad(geom, 1)
    check("modulus reciprocity", abs(r0.M * r1.M - 1.0) <= 1e-8, f"M*M' - 1 = {r0.M * r1.M - 1.0:.3e}")
    check("area/width bracket", r0.rengel_lo <= r0.M * (1 + 1e-12) and r0.M <= r0.rengel_hi * (1 + 1e-12),
          f"{r0.rengel_lo:.6g} <= {r0.M:.6g} <= {r0.rengel_hi:.6g}")
    if len(cfg.epsilons) >= 3:
        rep = boundary_collision_check(sections, cfg.epsilons)
        check("boundary collision", rep.status == "match",
              f"{rep.status} (target {rep.target}, tree shape ({rep.tree_shape}))")
    if tree.internal_length is not None and cfg.epsilons[-1] <= 1e-3:
        rec = sup_error_report(sections, cfg.epsilons[-1], cfg.delta, cfg.grid, check_grid=False)
        rel = abs(rec.l_estimate - tree.internal_length) / tree.internal_length
        check("internal length", rel < 0.05, f"estimate {rec.l_estimate:.6g} vs l = "
              f"{tree.internal_length:.6g} at eps={cfg.epsilons[-1]:g}")
    return EXIT_OK if all(results) else EXIT_NUMERIC


COMMANDS = {"classify": cmd_classify, "tree": cmd_tree, "map": cmd_map,
            "modulus": cmd_modulus, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ArithmeticError, HoloquadError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
