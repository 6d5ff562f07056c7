"""Command line driver: ``bandfem run`` and ``bandfem bandwidth``."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .assembly import AssemblyConfigError
from .band_mesh import MeshConfigurationError, write_vtk
from .benchmarks import (
    BAND_STUDY_H,
    BAND_WIDTHS,
    CASES,
    HESSIAN_MODES,
    StudyConfig,
    StudyConfigError,
    band_width_study,
    run_study,
)
from .sparse_solve import IndefiniteMatrixError
from .surface_error import CSV_COLUMNS

log = logging.getLogger("bandfem")

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_CONFIG = 3

CONFIG_KEYS = {
    "case": str,
    "hessian": str,
    "levels": int,
    "d": float,
    "h0": float,
    "tol": float,
    "out": str,
    "format": str,
    "mesh": str,
    "vtk": str,
}

_MD_TITLES = {
    "level": "level",
    "dofs": "#d.o.f.",
    "h": "h",
    "L2": "L2-norm",
    "L2_order": "Order",
    "Cnorm": "C-norm",
    "Cnorm_order": "Order",
    "normal_deriv": "normal deriv.",
    "iters": "# Iter.",
}


def format_value(v) -> str:
    """Integers verbatim, floats with 6 significant digits, ``None`` empty."""
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.6g}"


def emit_report(reports, fmt: str = "csv", path=None, header=()) -> str:
    """Write ``reports`` as CSV or a markdown table; returns the text.

    CSV floats carry 6 significant digits, so re-parsing the file gives back
    exactly the emitted values.  ``header`` lines are written first, as
    ``# `` comments in CSV and as a bullet list in markdown.
    """
    rows = [[format_value(getattr(r, c)) for c in CSV_COLUMNS] for r in reports]
    lines = []
    if fmt == "csv":
        lines += [f"# {h}" for h in header]
        lines.append(",".join(CSV_COLUMNS))
        lines += [",".join(r) for r in rows]
    elif fmt in ("md", "markdown"):
        lines += [f"- {h}" for h in header]
        if header:
            lines.append("")
        lines.append("| " + " | ".join(_MD_TITLES[c] for c in CSV_COLUMNS) + " |")
        lines.append("|" + "|".join("---:" for _ in CSV_COLUMNS) + "|")
        lines += ["| " + " | ".join(r) + " |" for r in rows]
    else:
        raise StudyConfigError(f"unknown report format {fmt!r}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_report(path) -> list[dict]:
    """Parse a CSV report back into dicts (``None`` for empty cells)."""
    with open(path, newline="") as fh:
        body = [line for line in fh if not line.startswith("#")]
    out = []
    for row in csv.DictReader(body):
        rec = {}
        for k, v in row.items():
            if v == "":
                rec[k] = None
            elif k in ("level", "dofs", "iters"):
                rec[k] = int(v)
            else:
                rec[k] = float(v)
        out.append(rec)
    return out


def parse_config_file(path) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise StudyConfigError(f"cannot read config file {path}: {exc}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise StudyConfigError(f"{path}:{num}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise StudyConfigError(f"{path}:{num}: unknown key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](val)
        except ValueError:
            raise StudyConfigError(f"{path}:{num}: bad value for {key}: {val!r}") from None
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bandfem", description="Narrow-band finite elements for surface PDEs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress per level")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", parents=[common], help="refinement study for one benchmark")
    run.add_argument("--config", help="key=value file; flags override its values")
    run.add_argument("--case", choices=sorted(CASES))
    run.add_argument("--hessian", choices=HESSIAN_MODES)
    run.add_argument("--levels", type=int)
    run.add_argument("--d", type=float)
    run.add_argument("--h0", type=float)
    run.add_argument("--tol", type=float)
    run.add_argument("--mesh", choices=("fitted", "polar", "cartesian"))
    run.add_argument("--out")
    run.add_argument("--format", choices=("csv", "md"))
    run.add_argument("--vtk", help="VTK path per level; '{level}' is substituted if present")

    bw = sub.add_parser("bandwidth", parents=[common], help="one solve per band width at a fixed mesh size")
    bw.add_argument("--case", choices=sorted(CASES), default="sphere")
    bw.add_argument("--widths", default=",".join(str(w) for w in BAND_WIDTHS))
    bw.add_argument("--h", type=float, default=BAND_STUDY_H)
    bw.add_argument("--hessian", choices=HESSIAN_MODES, default="exact")
    bw.add_argument("--out", required=True)
    bw.add_argument("--format", choices=("csv", "md"), default="csv")
    return parser


def _vtk_path(template: str, level: int) -> str:
    if "{level}" in template:
        return template.format(level=level)
    root, ext = os.path.splitext(template)
    return f"{root}_L{level}{ext or '.vtk'}"


def _study_config(args) -> StudyConfig:
    values = parse_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    if "case" not in values:
        raise StudyConfigError("no case given (use --case or a config file)")
    if "out" not in values:
        raise StudyConfigError("no output path given (use --out or a config file)")
    if values.get("format", "csv") not in ("csv", "md"):
        raise StudyConfigError(f"unknown format {values['format']!r}")
    return StudyConfig(**values)


def _cmd_run(args) -> int:
    config = _study_config(args)
    on_level = None
    if config.vtk:

        def on_level(mesh, u_h, report):
            phi = config.resolve().surface.signed_distance(mesh.points)
            write_vtk(_vtk_path(config.vtk, report.level), mesh, {"u": u_h, "phi": phi})

    result = run_study(config, on_level=on_level)
    emit_report(result.reports, config.format, config.out, header=result.header())
    log.info("%s: %d levels in %.1f s", result.case.name, len(result.reports), result.seconds)
    if result.aborted:
        print(f"bandfem: {result.message}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_bandwidth(args) -> int:
    try:
        widths = [float(w) for w in args.widths.split(",") if w.strip()]
    except ValueError:
        raise StudyConfigError(f"bad width list {args.widths!r}") from None
    if not widths:
        raise StudyConfigError("empty width list")
    reports = band_width_study(args.case, widths, args.h, hessian=args.hessian)
    header = [f"case={args.case} hessian={args.hessian} h={args.h:g}"]
    header += [f"row {i}: d={d:g}" for i, d in enumerate(widths)]
    emit_report(reports, args.format, args.out, header=header)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_bandwidth(args)
    except (StudyConfigError, MeshConfigurationError, AssemblyConfigError, OSError) as exc:
        print(f"bandfem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IndefiniteMatrixError, RuntimeError) as exc:
        print(f"bandfem: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
