"""Command-line driver: ``diffnormals {don,segment,paramsearch,evaluate,bench,synth}``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime failures.
Options may also come from a JSON ``--config`` file; flags given on the
command line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import _backend
from .cloud import PointCloud
from .clustering import DEFAULT_MAX_POINTS, DEFAULT_MIN_POINTS, ClusterParams, cluster_labels, euclidean_clusters
from .don import DEFAULT_SCALE_RATIO, DEFAULT_THRESHOLD, DoNParams, compute_don_field, field_from_maps, filter_by_magnitude
from .errors import DiffNormalsError, InvalidParamsError
from .evaluation import EvalConfig, evaluate_frame, format_ground_truth, load_ground_truth, records_to_csv
from .io import FORMATS, list_cloud_files, load_cloud, save_cloud
from .normals import DecimationSpec, angular_deviation_deg, estimate_normal_map
from .paramselect import ClassSample, ParamGrid, class_response_stats, select_params

log = logging.getLogger("diffnormals")

# built-in defaults for options a config file may override
DEFAULTS = {
    "r1": None,
    "r2": None,
    "threshold": DEFAULT_THRESHOLD,
    "decimation": 0,
    "tolerance": None,
    "min_cluster": DEFAULT_MIN_POINTS,
    "max_cluster": DEFAULT_MAX_POINTS,
    "threads": 0,
    "format": None,
    "backend": "auto",
}


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser, clustering: bool = False) -> None:
    g = p.add_argument_group("pipeline options")
    g.add_argument("--config", help="JSON file of option defaults")
    g.add_argument("--r1", type=float, help="small support radius (m)")
    g.add_argument("--r2", type=float, help=f"large support radius (m); default {DEFAULT_SCALE_RATIO:g} x r1")
    g.add_argument("--threshold", type=float, help=f"DoN magnitude threshold (default {DEFAULT_THRESHOLD})")
    g.add_argument("--decimation", type=int, help="decimation parameter d; 0 = exact (default)")
    g.add_argument("--threads", type=int, help="worker threads; 0 = all cores (default)")
    g.add_argument("--format", choices=FORMATS, help="output cloud format (default: from suffix)")
    g.add_argument("--backend", choices=("auto",) + _backend.BACKENDS, help="normal kernel backend")
    if clustering:
        g.add_argument("--tolerance", type=float, help="cluster distance tolerance (default r1)")
        g.add_argument("--min-cluster", dest="min_cluster", type=int,
                       help=f"minimum cluster size (default {DEFAULT_MIN_POINTS})")
        g.add_argument("--max-cluster", dest="max_cluster", type=int,
                       help=f"maximum cluster size (default {DEFAULT_MAX_POINTS})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffnormals", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("don", help="annotate a cloud with DoN vectors and magnitudes")
    p.add_argument("input")
    p.add_argument("--output", "-o", required=True)
    _common(p)

    p = sub.add_parser("segment", help="DoN threshold + Euclidean clustering")
    p.add_argument("input")
    p.add_argument("--output", "-o", required=True, help="cloud with a cluster_id attribute")
    p.add_argument("--summary", help="cluster CSV (default: <output stem>_clusters.csv)")
    _common(p, clustering=True)

    p = sub.add_parser("paramsearch", help="per-class DoN statistics over a radius grid")
    p.add_argument("--class", dest="classes", action="append", required=True, metavar="NAME=DIR",
                   help="class name and directory of its object clouds (repeatable)")
    p.add_argument("--grid", required=True,
                   help="'0.1,0.2x0.4,1,2' (all r1<r2 combinations) or '0.1:0.4,0.4:2'")
    p.add_argument("--context", help="full scene the class clouds were extracted from")
    p.add_argument("--objective", action="append", help="class to recommend radii for (default: all)")
    p.add_argument("--output", "-o", help="statistics CSV (default: stdout)")
    _common(p)

    p = sub.add_parser("evaluate", help="precision/recall against ground-truth boxes")
    p.add_argument("frames", help="directory of frame clouds named <frame_id>.<ext>")
    p.add_argument("ground_truth", help="box file: frame_id class cx cy cz length width height yaw")
    p.add_argument("--output", "-o", help="record CSV (default: stdout)")
    p.add_argument("--min-gt-points", dest="min_gt_points", type=int, default=100)
    _common(p, clustering=True)

    p = sub.add_parser("bench", help="time exact vs decimated DoN and report normal deviation")
    p.add_argument("input")
    p.add_argument("--repeat", type=int, default=1, help="timing repetitions; best is reported")
    p.add_argument("--output", "-o", help="report file (default: stdout)")
    _common(p)

    p = sub.add_parser("synth", help="write synthetic test scenes")
    p.add_argument("kind", choices=("street", "pole-box", "frames"))
    p.add_argument("output", help="cloud file, or directory for 'frames'")
    p.add_argument("--points", type=int, default=200_000, help="street scene size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=FORMATS)
    return parser


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return cfg


def resolve_options(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset options from the config file, then built-in defaults."""
    cfg = _load_config(getattr(args, "config", None))
    for key, default in DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, cfg.get(key, default))
    return args


def _don_params(args) -> DoNParams:
    if args.r1 is None:
        raise UsageError("--r1 is required")
    r2 = args.r2 if args.r2 is not None else args.r1 * DEFAULT_SCALE_RATIO
    try:
        return DoNParams(args.r1, r2)
    except InvalidParamsError as exc:
        raise UsageError(str(exc)) from None


def _decimation(args) -> DecimationSpec:
    if args.decimation < 0:
        raise UsageError("--decimation must be >= 0")
    return DecimationSpec.from_cli(args.decimation)


def _threshold(args) -> float:
    if not 0.0 <= args.threshold <= 1.0:
        raise UsageError("--threshold must lie in [0, 1]")
    return float(args.threshold)


def _cluster_params(args, params: DoNParams) -> ClusterParams:
    tol = args.tolerance if args.tolerance is not None else params.r1
    try:
        return ClusterParams(tol, args.min_cluster, args.max_cluster)
    except InvalidParamsError as exc:
        raise UsageError(str(exc)) from None


def _kw(args) -> dict:
    return {"threads": args.threads, "backend": args.backend}


def _write_text(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_don(args) -> int:
    params = _don_params(args)
    decim = _decimation(args)
    cloud = load_cloud(args.input)
    field = compute_don_field(cloud, params, decim, **_kw(args))
    save_cloud(cloud.with_attributes(**field.attributes()), args.output, args.format)
    log.info("wrote %d points, %d with valid DoN", len(cloud), int(field.valid.sum()))
    return 0


def cmd_segment(args) -> int:
    params = _don_params(args)
    decim = _decimation(args)
    t = _threshold(args)
    cparams = _cluster_params(args, params)
    cloud = load_cloud(args.input)
    field = compute_don_field(cloud, params, decim, **_kw(args))
    kept = filter_by_magnitude(field, t)
    clusters = euclidean_clusters(cloud, kept, cparams)
    labels = cluster_labels(len(cloud), clusters)
    save_cloud(cloud.with_attributes(cluster_id=labels), args.output, args.format)

    summary = args.summary or str(Path(args.output).with_name(Path(args.output).stem + "_clusters.csv"))
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cluster_id", "size", "cx", "cy", "cz"])
    for cid, c in enumerate(clusters):
        centroid = cloud.points[c.indices].mean(axis=0)
        w.writerow([cid, len(c), *(f"{v:.6f}" for v in centroid)])
    Path(summary).write_text(buf.getvalue())
    log.info("%d of %d points passed the threshold; %d clusters", len(kept), len(cloud), len(clusters))
    return 0


def _parse_class_args(items) -> list[tuple[str, Path]]:
    out = []
    for item in items:
        name, sep, directory = item.partition("=")
        if not sep or not name or not directory:
            raise UsageError(f"--class expects NAME=DIR, got {item!r}")
        out.append((name, Path(directory)))
    return out


def cmd_paramsearch(args) -> int:
    try:
        grid = ParamGrid.parse(args.grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    decim = _decimation(args)
    samples = []
    for name, directory in _parse_class_args(args.classes):
        clouds = [load_cloud(p) for p in list_cloud_files(directory)]
        samples.append(ClassSample(name, clouds))
    context = load_cloud(args.context) if args.context else None
    stats = class_response_stats(samples, grid, context, decim=decim, **_kw(args))
    _write_text(args.output, stats.to_csv())

    objectives = args.objective or stats.classes()
    for obj in objectives:
        if obj not in stats.classes():
            raise UsageError(f"unknown objective class {obj!r}")
        params, t = select_params(stats, obj)
        print(f"recommended {obj}: r1={params.r1:g} r2={params.r2:g} threshold={t:.4f}",
              file=sys.stderr if args.output is None else sys.stdout)
    return 0


def cmd_evaluate(args) -> int:
    params = _don_params(args)
    config = EvalConfig(
        don_params=params,
        threshold=_threshold(args),
        cluster_params=_cluster_params(args, params),
        min_gt_points=args.min_gt_points,
        decimation=_decimation(args),
    )
    boxes = load_ground_truth(args.ground_truth)
    frames = {p.stem: p for p in list_cloud_files(args.frames)}
    by_frame: dict[str, list] = {}
    for b in boxes:
        by_frame.setdefault(b.frame_id, []).append(b)
    records = []
    for frame_id, frame_boxes in by_frame.items():
        if frame_id not in frames:
            log.warning("frame %s not found in %s; skipping %d box(es)",
                        frame_id, args.frames, len(frame_boxes))
            continue
        cloud = load_cloud(frames[frame_id])
        records.extend(evaluate_frame(cloud, frame_boxes, config, **_kw(args)))
    _write_text(args.output, records_to_csv(records))
    return 0


def bench_report(cloud: PointCloud, params: DoNParams, d: int, *, repeat: int = 1,
                 threads=None, backend=None) -> str:
    """Wall times of exact and (if ``d > 0``) decimated DoN, plus normal deviation."""
    kw = {"threads": threads, "backend": backend}

    def timed(decim):
        best, maps = None, None
        for _ in range(max(repeat, 1)):
            t0 = time.perf_counter()
            small = estimate_normal_map(cloud, params.r1, decim, **kw)
            large = estimate_normal_map(cloud, params.r2, decim, **kw)
            field_from_maps(small, large, params)
            dt = time.perf_counter() - t0
            if best is None or dt < best:
                best, maps = dt, (small, large)
        return best, maps

    exact_t, exact_maps = timed(DecimationSpec.off())
    lines = [f"# backend={_backend.default_backend() if backend in (None, 'auto') else backend} "
             f"points={len(cloud)} r1={params.r1:g} r2={params.r2:g}",
             "mode,d,wall_seconds",
             f"exact,0,{exact_t:.6f}"]
    if d > 0:
        dec_t, dec_maps = timed(DecimationSpec(d))
        lines.append(f"decimated,{d},{dec_t:.6f}")
        lines.append(f"# speedup={exact_t / dec_t:.3f}")
        lines.append("radius,median_deviation_deg,p95_deviation_deg")
        for exact, approx in zip(exact_maps, dec_maps):
            dev = angular_deviation_deg(exact, approx)
            med, p95 = (np.percentile(dev, [50, 95]) if dev.size else (float("nan"),) * 2)
            lines.append(f"{exact.radius:g},{med:.6f},{p95:.6f}")
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    params = _don_params(args)
    if args.decimation < 0:
        raise UsageError("--decimation must be >= 0")
    cloud = load_cloud(args.input)
    _write_text(args.output, bench_report(cloud, params, args.decimation,
                                          repeat=args.repeat, **_kw(args)))
    return 0


def cmd_synth(args) -> int:
    from . import synthetic

    if args.kind == "frames":
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        frames = synthetic.segmentation_frames(seed=args.seed)
        suffix = {"xyz": ".xyz", "pcd-ascii": ".pcd", "ply": ".ply", None: ".ply"}[args.format]
        boxes = []
        for f in frames:
            save_cloud(f.scene.cloud, out / f"{f.frame_id}{suffix}", args.format)
            boxes.extend(f.scene.boxes)
        (out / "ground_truth.txt").write_text(format_ground_truth(boxes))
        return 0
    scene = (synthetic.street_scene(args.points, args.seed) if args.kind == "street"
             else synthetic.pole_box_scene(args.seed))
    save_cloud(scene.cloud.with_attributes(label=scene.labels), args.output, args.format)
    return 0


COMMANDS = {
    "don": cmd_don,
    "segment": cmd_segment,
    "paramsearch": cmd_paramsearch,
    "evaluate": cmd_evaluate,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command != "synth":
            resolve_options(args)
            if args.backend != "auto" and args.backend not in _backend.available():
                raise UsageError(f"backend {args.backend!r} is not available")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except (DiffNormalsError, OSError, ValueError) as exc:
        print(f"diffnormals: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
