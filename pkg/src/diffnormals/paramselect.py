"""Choosing DoN radii from per-class response statistics.

For every candidate radius pair, DoN magnitudes are aggregated over the
points of each labelled class. The recommended pair for an objective class
maximises the gap between its median response and the strongest median of
any other class.
"""

from __future__ import annotations

import csv
import io as _io
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud
from .don import DoNParams, field_from_maps
from .errors import EmptyClassError, UnknownClassError
from .normals import DecimationSpec, estimate_normal_map

# Typical radius pairs for pedestrian-sized and car-sized objects. These are
# documentation presets only; nothing selects them automatically.
PRESETS = {
    "pedestrian": DoNParams(0.1, 0.4),
    "car": DoNParams(0.4, 2.0),
}

STATS_HEADER = ["class", "r1", "r2", "mean", "median", "variance", "valid_count"]

# object points farther than this from every scene point are not extracts of it
_MEMBERSHIP_TOL = 1e-6


@dataclass
class ClassSample:
    class_name: str
    clouds: list

    def __post_init__(self):
        if not self.clouds or all(len(c) == 0 for c in self.clouds):
            raise EmptyClassError(f"class {self.class_name!r} has no points")


@dataclass(frozen=True)
class ParamGrid:
    pairs: tuple

    def __post_init__(self):
        pairs = tuple(p if isinstance(p, DoNParams) else DoNParams(*p) for p in self.pairs)
        if not pairs:
            raise ValueError("parameter grid is empty")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def product(cls, small: Iterable[float], large: Iterable[float]) -> "ParamGrid":
        """All ``(r1, r2)`` combinations with ``r1 < r2``."""
        large = list(large)
        return cls(tuple(DoNParams(a, b) for a in small for b in large if a < b))

    @classmethod
    def parse(cls, text: str) -> "ParamGrid":
        """Parse ``"0.1,0.2x0.4,1"`` (product) or ``"0.1:0.4,0.4:2"`` (pairs)."""
        text = text.replace(" ", "")
        try:
            if ":" in text:
                pairs = []
                for item in text.split(","):
                    a, b = item.split(":")
                    pairs.append(DoNParams(float(a), float(b)))
                return cls(tuple(pairs))
            small, large = re.split(r"[x×]", text)
            return cls.product([float(v) for v in small.split(",")],
                               [float(v) for v in large.split(",")])
        except ValueError as exc:
            raise ValueError(f"malformed grid spec {text!r}: {exc}") from None

    def radii(self) -> list[float]:
        return sorted({r for p in self.pairs for r in (p.r1, p.r2)})


@dataclass(frozen=True)
class StatRow:
    class_name: str
    params: DoNParams
    mean: Optional[float]
    median: Optional[float]
    variance: Optional[float]
    valid_count: int


class ClassStats:
    """Aggregates keyed by ``(class_name, DoNParams)``."""

    def __init__(self, rows: Sequence[StatRow]):
        self.rows = list(rows)
        self._by_key = {(r.class_name, r.params): r for r in self.rows}

    def __getitem__(self, key) -> StatRow:
        return self._by_key[key]

    def classes(self) -> list[str]:
        return sorted({r.class_name for r in self.rows})

    def pairs(self) -> list[DoNParams]:
        return sorted({r.params for r in self.rows}, key=lambda p: (p.r1, p.r2))

    def median(self, class_name: str, params: DoNParams) -> Optional[float]:
        row = self._by_key.get((class_name, params))
        return None if row is None else row.median

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STATS_HEADER)
        fmt = lambda v: "" if v is None else f"{v:.9g}"  # noqa: E731
        for r in self.rows:
            w.writerow([r.class_name, f"{r.params.r1:g}", f"{r.params.r2:g}",
                        fmt(r.mean), fmt(r.median), fmt(r.variance), r.valid_count])
        return buf.getvalue()


def aggregate(magnitudes: np.ndarray) -> tuple[Optional[float], Optional[float], Optional[float], int]:
    """``(mean, median, variance, count)`` of finite magnitudes."""
    m = magnitudes[np.isfinite(magnitudes)]
    if m.size == 0:
        return None, None, None, 0
    return float(m.mean()), float(np.median(m)), float(m.var()), int(m.size)


def _members_in_context(context: PointCloud, cloud: PointCloud, class_name: str) -> np.ndarray:
    if len(cloud) == 0:
        return np.empty(0, dtype=np.intp)
    dist, idx = cKDTree(context.points).query(cloud.points)
    if np.any(dist > _MEMBERSHIP_TOL):
        raise ValueError(f"class {class_name!r} has points that are not part of the context scene")
    return idx


def class_response_stats(
    samples: Sequence[ClassSample],
    grid: ParamGrid,
    context: Optional[PointCloud] = None,
    *,
    decim: Optional[DecimationSpec] = None,
    threads: Optional[int] = None,
    backend: Optional[str] = None,
) -> ClassStats:
    """Mean, median and variance of DoN magnitude per class and radius pair.

    With a ``context`` scene, normals are estimated in the full scene and the
    sample clouds only mark which scene points belong to each class (matched
    by position). Without one, each sample cloud is processed on its own.
    """
    if not samples:
        raise EmptyClassError("no class samples given")
    kw = dict(threads=threads, backend=backend)
    radii = grid.radii()

    # one entry per (class, cloud): its normal maps and the point rows to read
    if context is not None:
        scene_maps = {r: estimate_normal_map(context, r, decim, **kw) for r in radii}
        jobs = [
            (s.class_name, scene_maps, _members_in_context(context, c, s.class_name))
            for s in samples for c in s.clouds
        ]
    else:
        jobs = []
        for s in samples:
            for c in s.clouds:
                maps = {r: estimate_normal_map(c, r, decim, **kw) for r in radii}
                jobs.append((s.class_name, maps, np.arange(len(c))))

    fields: dict = {}

    def magnitudes(maps, p):
        key = (id(maps), p)
        if key not in fields:
            fields[key] = field_from_maps(maps[p.r1], maps[p.r2], p).magnitudes
        return fields[key]

    rows = []
    for class_name in dict.fromkeys(s.class_name for s in samples):
        for p in grid.pairs:
            mags = [
                magnitudes(maps, p)[members]
                for name, maps, members in jobs if name == class_name
            ]
            mean, median, var, count = aggregate(np.concatenate(mags))
            rows.append(StatRow(class_name, p, mean, median, var, count))
    return ClassStats(rows)


def select_params(stats: ClassStats, objective: str) -> tuple[DoNParams, float]:
    """Radius pair and magnitude threshold separating ``objective`` from the rest.

    The margin at a pair is the objective's median minus the largest median of
    any other class there (0 when there is none). Ties prefer the larger
    objective median, then the smaller ``r2``, then the smaller ``r1``. The
    threshold is the midpoint of the two medians, clamped to [0, 1].
    """
    if objective not in stats.classes():
        raise UnknownClassError(objective)
    others = [c for c in stats.classes() if c != objective]
    best = None
    for p in stats.pairs():
        own = stats.median(objective, p)
        if own is None:
            continue
        rivals = [m for m in (stats.median(c, p) for c in others) if m is not None]
        rival = max(rivals) if rivals else 0.0
        key = (own - rival, own, -p.r2, -p.r1)
        if best is None or key > best[0]:
            best = (key, p, own, rival)
    if best is None:
        raise EmptyClassError(f"class {objective!r} has no valid DoN responses")
    _, params, own, rival = best
    return params, float(np.clip((own + rival) / 2.0, 0.0, 1.0))
