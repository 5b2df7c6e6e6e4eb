"""Scoring DoN segmentation against annotated 3D boxes.

Each ground-truth object is the set of scene points inside its box. Every
box independently takes the cluster sharing the most points with it, and is
scored by point precision and recall.
"""

from __future__ import annotations

import csv
import io as _io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cloud import PointCloud, as_point
from .clustering import Cluster, ClusterParams, euclidean_clusters
from .don import DEFAULT_THRESHOLD, DoNParams, compute_don_field, filter_by_magnitude
from .errors import CloudIOError, EmptyInputError, ParseError
from .normals import DecimationSpec


DEFAULT_MIN_GT_POINTS = 100
RECORD_HEADER = ["frame_id", "class", "gt_points", "matched", "precision", "recall"]


def _wrap_angle(a: float) -> float:
    """Map ``a`` into (-pi, pi]."""
    w = math.remainder(a, 2 * math.pi)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class GroundTruthBox:
    """Upright box rotated by ``yaw`` about +z; dims are (length, width, height)."""

    frame_id: str
    class_name: str
    center: tuple
    dims: tuple
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in as_point(self.center)))
        dims = tuple(float(v) for v in self.dims)
        if len(dims) != 3 or not all(math.isfinite(d) and d > 0 for d in dims):
            raise ValueError(f"box dimensions must be three positive numbers, got {self.dims}")
        object.__setattr__(self, "dims", dims)
        if not math.isfinite(self.yaw):
            raise ValueError("box yaw must be finite")
        object.__setattr__(self, "yaw", _wrap_angle(float(self.yaw)))


@dataclass
class EvalRecord:
    frame_id: str
    class_name: str
    gt_point_count: int
    matched: bool
    precision: Optional[float] = None
    recall: Optional[float] = None


@dataclass
class EvalConfig:
    don_params: DoNParams
    threshold: float = DEFAULT_THRESHOLD
    cluster_params: Optional[ClusterParams] = None
    min_gt_points: int = DEFAULT_MIN_GT_POINTS
    decimation: DecimationSpec = field(default_factory=DecimationSpec.off)

    def __post_init__(self):
        if self.cluster_params is None:
            self.cluster_params = ClusterParams(self.don_params.r1)
        if self.min_gt_points < 1:
            raise ValueError(f"min_gt_points must be >= 1, got {self.min_gt_points}")


def points_in_box(cloud: PointCloud, box: GroundTruthBox) -> np.ndarray:
    """Indices of points inside ``box``, faces included."""
    if len(cloud) == 0:
        return np.empty(0, dtype=np.intp)
    d = cloud.points - np.asarray(box.center)
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    local_x = c * d[:, 0] + s * d[:, 1]
    local_y = -s * d[:, 0] + c * d[:, 1]
    hl, hw, hh = (v / 2.0 for v in box.dims)
    inside = (np.abs(local_x) <= hl) & (np.abs(local_y) <= hw) & (np.abs(d[:, 2]) <= hh)
    return np.flatnonzero(inside)


def _as_index_set(gt) -> np.ndarray:
    return np.unique(np.asarray(gt, dtype=np.int64).reshape(-1))


def precision_recall(cluster: Cluster, gt) -> tuple[float, float]:
    gt = _as_index_set(gt)
    pred = _as_index_set(cluster.indices)
    if pred.size == 0 or gt.size == 0:
        raise EmptyInputError("precision/recall need a non-empty cluster and ground truth")
    hit = np.intersect1d(pred, gt, assume_unique=True).size
    return hit / pred.size, hit / gt.size


def match_cluster(clusters: Sequence[Cluster], gt) -> Optional[Cluster]:
    """Cluster with the largest overlap with ``gt``; ``None`` if none overlap.

    Ties go to the higher precision, then to the cluster holding the lowest
    point index.
    """
    gt = _as_index_set(gt)
    best = None
    for c in clusters:
        hit = np.intersect1d(c.indices, gt).size
        if hit == 0:
            continue
        key = (hit, hit / len(c), -c.min_index)
        if best is None or key > best[0]:
            best = (key, c)
    return None if best is None else best[1]


def evaluate_frame(
    cloud: PointCloud,
    boxes: Sequence[GroundTruthBox],
    config: EvalConfig,
    *,
    threads: Optional[int] = None,
    backend: Optional[str] = None,
) -> list[EvalRecord]:
    gts = [(b, points_in_box(cloud, b)) for b in boxes]
    gts = [(b, g) for b, g in gts if len(g) >= config.min_gt_points]
    if not gts:
        return []
    field_ = compute_don_field(cloud, config.don_params, config.decimation,
                               threads=threads, backend=backend)
    kept = filter_by_magnitude(field_, config.threshold)
    clusters = euclidean_clusters(cloud, kept, config.cluster_params)
    records = []
    for box, gt in gts:
        best = match_cluster(clusters, gt)
        if best is None:
            records.append(EvalRecord(box.frame_id, box.class_name, len(gt), False))
        else:
            p, r = precision_recall(best, gt)
            records.append(EvalRecord(box.frame_id, box.class_name, len(gt), True, p, r))
    return records


def evaluate_sequence(frames, config: EvalConfig, *, threads=None, backend=None) -> list[EvalRecord]:
    """One record per box holding at least ``min_gt_points`` scene points.

    ``frames`` is a sequence of ``(cloud, boxes)`` pairs; records follow frame
    order, then box order.
    """
    records = []
    for cloud, boxes in frames:
        records.extend(evaluate_frame(cloud, boxes, config, threads=threads, backend=backend))
    return records


def records_to_csv(records: Sequence[EvalRecord]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for r in records:
        w.writerow([
            r.frame_id, r.class_name, r.gt_point_count, int(r.matched),
            "" if r.precision is None else f"{r.precision:.6f}",
            "" if r.recall is None else f"{r.recall:.6f}",
        ])
    return buf.getvalue()


def parse_ground_truth(text: str, path=None) -> list[GroundTruthBox]:
    """Parse ``frame_id class cx cy cz length width height yaw`` lines."""
    boxes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 9:
            raise ParseError(f"expected 9 fields, got {len(tokens)}", path, lineno)
        try:
            values = [float(t) for t in tokens[2:]]
            boxes.append(GroundTruthBox(tokens[0], tokens[1], values[0:3], values[3:6], values[6]))
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
    return boxes


def load_ground_truth(path) -> list[GroundTruthBox]:
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise CloudIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_ground_truth(text, path)


def format_ground_truth(boxes: Sequence[GroundTruthBox]) -> str:
    lines = ["# frame_id class cx cy cz length width height yaw"]
    for b in boxes:
        vals = [*b.center, *b.dims, b.yaw]
        lines.append(" ".join([b.frame_id, b.class_name, *(f"{v:.9g}" for v in vals)]))
    return "\n".join(lines) + "\n"
