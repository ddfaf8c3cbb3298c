"""Script entry: pick result files out of a run directory and render them.

    plotkit --in results/pinem --kind spectrum_compare --out fig2.png
    plotkit --in results/phase_accel --kind animation --out frames/

Inputs are discovered by the emitted file roles (numeric spectrum, analytic
overlays, scan table, frame directory); ``--inputs`` overrides discovery
with explicit paths.  Exit codes: 0 success, 2 schema/discovery error,
1 anything else.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURE_KINDS, FigureJob, render
from .io import SchemaError


def _one(matches: list, where: Path, what: str) -> Path:
    if not matches:
        raise SchemaError(f"{where}: no {what} found")
    return sorted(matches)[0]


def discover_inputs(in_dir: Path, kind: str) -> tuple:
    """Default input selection per figure kind, in overlay order."""
    if kind in ("phase_space", "animation"):
        return (_one(list(in_dir.glob("*_frames")), in_dir, "frame directory"),)
    if kind == "gamma_scan":
        return (_one(list(in_dir.glob("*_scan.tsv")), in_dir, "scan table"),)
    numeric = _one(list(in_dir.glob("*_spectrum_numeric.tsv")), in_dir,
                   "numeric spectrum")
    stem = numeric.name.replace("_spectrum_numeric.tsv", "")
    if kind == "spectrum_compare":
        overlay = list(in_dir.glob(f"{stem}_spectrum_ladder.tsv")) or list(
            in_dir.glob(f"{stem}_spectrum_total.tsv")
        )
        return (numeric, _one(overlay, in_dir, "analytic spectrum"))
    # decomposition inset: main overlay plus the redistribution pieces
    total = _one(list(in_dir.glob(f"{stem}_spectrum_total.tsv")), in_dir,
                 "analytic total spectrum")
    pieces = [
        p
        for name in (f"{stem}_spectrum_rho1.tsv", f"{stem}_spectrum_rho0_plus_rho2.tsv")
        for p in in_dir.glob(name)
    ]
    if not pieces:
        raise SchemaError(f"{in_dir}: no decomposition pieces found")
    return (numeric, total, *pieces)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render simulation result files into figures.",
    )
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="run output directory")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--out", required=True,
                        help="image path (directory for animation)")
    parser.add_argument("--inputs", nargs="+", default=None,
                        help="explicit input files (overrides discovery)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--dpi", type=int, default=None)
    parser.add_argument("--xlim", nargs=2, type=float, default=None,
                        metavar=("LO", "HI"))
    parser.add_argument("--ylim", nargs=2, type=float, default=None,
                        metavar=("LO", "HI"))
    args = parser.parse_args(argv)

    style = {}
    if args.title:
        style["title"] = args.title
    if args.dpi:
        style["dpi"] = args.dpi
    if args.xlim:
        style["xlim"] = tuple(args.xlim)
    if args.ylim:
        style["ylim"] = tuple(args.ylim)
    try:
        inputs = (
            tuple(args.inputs)
            if args.inputs
            else discover_inputs(Path(args.in_dir), args.kind)
        )
        job = FigureJob(inputs=inputs, figure_kind=args.kind, style=style)
        written = render(job, args.out)
        print(f"wrote {written}")
        return 0
    except (SchemaError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # pragma: no cover - last-resort diagnostics
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
