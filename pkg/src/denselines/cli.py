"""Command-line front end: compute densities, render images, run benchmarks.

Machine-readable results go to stdout as one JSON line per command; human
messages go to stderr. Exit codes: 0 success, 1 data/runtime error, 2 usage
error. Identical flags and seeds reproduce identical output files bit for
bit.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from . import dlns
from .density import DensityOptions, compute_denselines
from .ingest import (
    DataFormatError,
    SeriesSet,
    TwoBandModelSpec,
    generate_random_walks,
    generate_two_band,
    parse_csv,
)
from .model import ContractError, GridSpec
from .post import diff as diff_matrices
from .post import gaussian_smooth, stats
from .render import RenderConfigError, RenderSpec, colorize, encode_png, render_legend


class CliError(Exception):
    """Fatal data or runtime error; message printed to stderr, exit code 1."""


def _load_dataset(args) -> SeriesSet:
    if args.input:
        try:
            with open(args.input, "rb") as f:
                return parse_csv(f)
        except OSError as e:
            raise CliError(f"cannot read {args.input}: {e}") from e
        except DataFormatError as e:
            raise CliError(f"{args.input}: {e}") from e
    if args.generate == "two-band":
        spec = TwoBandModelSpec(
            n_per_group=args.n, samples_per_series=args.points, seed=args.seed
        )
        return generate_two_band(spec)
    if args.generate == "random-walk":
        return generate_random_walks(args.seed, args.n, args.points)
    raise CliError("either --input or --generate is required")


def _grid_for(args, dataset: SeriesSet) -> GridSpec:
    t_min = args.tmin if args.tmin is not None else dataset.t_extent[0]
    t_max = args.tmax if args.tmax is not None else dataset.t_extent[1]
    v_min = args.vmin if args.vmin is not None else dataset.v_extent[0]
    v_max = args.vmax if args.vmax is not None else dataset.v_extent[1]
    if t_min == t_max:
        t_min, t_max = t_min - 0.5, t_max + 0.5
    if v_min == v_max:
        v_min, v_max = v_min - 0.5, v_max + 0.5
    try:
        return GridSpec(args.cols, args.rows, t_min, t_max, v_min, v_max)
    except ContractError as e:
        raise CliError(str(e)) from e


def _parse_scale(text: str) -> tuple[str, float]:
    if text == "linear" or text == "log1p":
        return text, 1.0
    if text.startswith("pow:"):
        try:
            gamma = float(text.split(":", 1)[1])
        except ValueError:
            raise CliError(f"bad --scale value {text!r}") from None
        if gamma <= 0:
            raise CliError("--scale pow gamma must be positive")
        return "pow", gamma
    raise CliError(f"bad --scale value {text!r} (linear | log1p | pow:G)")


def _emit(payload: dict) -> None:
    print(json.dumps(payload), flush=True)


def cmd_compute(args) -> int:
    t0 = time.perf_counter()
    dataset = _load_dataset(args)
    grid = _grid_for(args, dataset)
    options = DensityOptions(mode=args.mode, raw=args.raw, max_gap=args.max_gap)
    d = compute_denselines(dataset, grid, options, workers=args.workers)
    dlns.write(d, args.out)
    s = stats(d)
    _emit(
        {
            "series_count": d.series_count,
            "cols": grid.cols,
            "rows": grid.rows,
            "mode": args.mode,
            "raw": args.raw,
            "min": s.min,
            "max": s.max,
            "nonzero_min": s.nonzero_min,
            "total": s.total,
            "out": args.out,
            "seconds": round(time.perf_counter() - t0, 6),
        }
    )
    return 0


def cmd_render(args) -> int:
    t0 = time.perf_counter()
    transform, gamma = _parse_scale(args.scale)
    try:
        if args.diff:
            a = dlns.read(args.diff[0])
            b = dlns.read(args.diff[1])
            matrix = diff_matrices(a, b)
            scale = "diverging"
            pre_total = float(matrix.cells.sum())
            smoothed_total = pre_total
            if args.smooth and args.smooth > 0:
                raise CliError("--smooth is not supported for --diff output")
        else:
            if not args.density:
                raise CliError("a density file (or --diff A B) is required")
            matrix = dlns.read(args.density)
            scale = "viridis"
            pre_total = stats(matrix).total
            if args.smooth and args.smooth > 0:
                matrix = gaussian_smooth(matrix, args.smooth)
            smoothed_total = stats(matrix).total
    except (OSError, dlns.DlnsError) as e:
        raise CliError(str(e)) from e

    spec = RenderSpec(
        scale=scale,
        transform=transform,
        gamma=gamma,
        domain=tuple(args.domain) if args.domain else None,
        discontinuity=not args.no_discontinuity,
    )
    try:
        img = colorize(matrix, spec)
        encode_png(img, args.out)
        if args.legend:
            from .post import DensityStats

            if args.diff:
                m = float(np.abs(matrix.cells).max())
                legend_stats = DensityStats(-m, m, None, 0.0, np.zeros(0))
                legend_spec = RenderSpec(
                    scale=scale,
                    transform=transform,
                    gamma=gamma,
                    domain=(-m, m) if m > 0 else (-1.0, 1.0),
                    discontinuity=spec.discontinuity,
                )
                encode_png(render_legend(legend_spec, legend_stats), args.legend)
            else:
                encode_png(render_legend(spec, stats(matrix)), args.legend)
    except (RenderConfigError, OSError) as e:
        raise CliError(str(e)) from e

    _emit(
        {
            "out": args.out,
            "total": pre_total,
            "total_after_smooth": smoothed_total,
            "width": img.shape[1],
            "height": img.shape[0],
            "seconds": round(time.perf_counter() - t0, 6),
        }
    )
    return 0


def cmd_bench(args) -> int:
    gen_t0 = time.perf_counter()
    dataset = generate_random_walks(args.seed, args.n, args.points)
    gen_seconds = time.perf_counter() - gen_t0
    grid = GridSpec(
        args.cols,
        args.rows,
        dataset.t_extent[0],
        dataset.t_extent[1],
        dataset.v_extent[0],
        dataset.v_extent[1],
    )
    options = DensityOptions(mode=args.mode)
    runs = []
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        compute_denselines(dataset, grid, options, workers=args.workers)
        runs.append(time.perf_counter() - t0)
    seconds = statistics.median(runs)
    _emit(
        {
            "n_series": args.n,
            "points": args.points,
            "cols": args.cols,
            "rows": args.rows,
            "mode": args.mode,
            "workers": args.workers,
            "gen_seconds": round(gen_seconds, 4),
            "runs": [round(r, 4) for r in runs],
            "seconds": round(seconds, 4),
            "series_per_second": round(args.n / seconds, 1),
        }
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    dataset = _load_dataset(args)
    app = create_app(
        dataset,
        workers=args.workers,
        max_cells=args.max_cells,
        static_dir=args.static,
    )
    print(f"serving {len(dataset)} series on port {args.port}", file=sys.stderr)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="CSV file (series_id,time,value)")
    p.add_argument("--generate", choices=["two-band", "random-walk"])
    p.add_argument("--n", type=int, default=5000, help="series (per group for two-band)")
    p.add_argument("--points", type=int, default=256, help="samples per series")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="denselines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="compute a density matrix into a .dlns file")
    _add_dataset_args(p)
    p.add_argument("--cols", type=int, default=400)
    p.add_argument("--rows", type=int, default=300)
    p.add_argument("--tmin", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--vmin", type=float)
    p.add_argument("--vmax", type=float)
    p.add_argument("--mode", choices=["binary", "aa", "exact"], default="binary")
    p.add_argument("--raw", action="store_true", help="skip per-column normalization")
    p.add_argument("--max-gap", type=float, default=None)
    p.add_argument("--workers", type=int, default=1, help="0 = all cores")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_compute)

    p = sub.add_parser("render", help="render a .dlns file to PNG")
    p.add_argument("density", nargs="?", help=".dlns input")
    p.add_argument("--diff", nargs=2, metavar=("A", "B"), help="render A - B instead")
    p.add_argument("--smooth", type=float, default=0.0, help="Gaussian sigma in cells")
    p.add_argument("--scale", default="linear", help="linear | log1p | pow:G")
    p.add_argument("--domain", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--no-discontinuity", action="store_true")
    p.add_argument("--legend", help="also write a legend strip PNG here")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("bench", help="benchmark density computation")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cols", type=int, default=400)
    p.add_argument("--rows", type=int, default=300)
    p.add_argument("--mode", choices=["binary", "aa", "exact"], default="binary")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("serve", help="serve the interactive density API")
    p.add_argument("--data", dest="input", help="CSV dataset to load")
    p.add_argument("--generate", choices=["two-band", "random-walk"])
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-cells", type=int, default=4096 * 4096)
    p.add_argument("--static", help="directory of viewer assets to serve at /")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ContractError, DataFormatError, dlns.DlnsError, RenderConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
