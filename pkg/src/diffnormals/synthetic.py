"""Synthetic scenes with known object membership.

Surfaces are sampled on jittered lattices so density is roughly uniform
(``spacing`` metres between neighbours). Every generator takes a numpy
``Generator`` and is reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cloud import PointCloud


def _lattice(a_len: float, b_len: float, spacing: float, rng, jitter: float):
    na = max(int(round(a_len / spacing)), 1)
    nb = max(int(round(b_len / spacing)), 1)
    a = (np.arange(na) + 0.5) * (a_len / na)
    b = (np.arange(nb) + 0.5) * (b_len / nb)
    aa, bb = np.meshgrid(a, b, indexing="ij")
    aa = aa.ravel()
    bb = bb.ravel()
    if jitter > 0:
        aa = aa + rng.uniform(-jitter, jitter, aa.shape) * spacing
        bb = bb + rng.uniform(-jitter, jitter, bb.shape) * spacing
    return np.clip(aa, 0, a_len), np.clip(bb, 0, b_len)


def plane(x0, x1, y0, y1, z=0.0, spacing=0.05, rng=None, jitter=0.3, holes=()) -> np.ndarray:
    """Horizontal rectangle; ``holes`` are ``(x0, x1, y0, y1)`` cut-outs."""
    rng = rng if rng is not None else np.random.default_rng(0)
    a, b = _lattice(x1 - x0, y1 - y0, spacing, rng, jitter)
    pts = np.column_stack([x0 + a, y0 + b, np.full(a.shape, float(z))])
    for hx0, hx1, hy0, hy1 in holes:
        inside = (pts[:, 0] >= hx0) & (pts[:, 0] <= hx1) & (pts[:, 1] >= hy0) & (pts[:, 1] <= hy1)
        pts = pts[~inside]
    return pts


def box_surface(center, dims, spacing=0.05, rng=None, jitter=0.3, bottom=False) -> np.ndarray:
    """Faces of an axis-aligned box; the bottom face is omitted by default."""
    rng = rng if rng is not None else np.random.default_rng(0)
    cx, cy, cz = center
    lx, ly, lz = dims
    x0, y0, z0 = cx - lx / 2, cy - ly / 2, cz - lz / 2
    faces = []
    a, b = _lattice(lx, ly, spacing, rng, jitter)
    faces.append(np.column_stack([x0 + a, y0 + b, np.full(a.shape, z0 + lz)]))
    if bottom:
        a, b = _lattice(lx, ly, spacing, rng, jitter)
        faces.append(np.column_stack([x0 + a, y0 + b, np.full(a.shape, z0)]))
    for x in (x0, x0 + lx):
        a, b = _lattice(ly, lz, spacing, rng, jitter)
        faces.append(np.column_stack([np.full(a.shape, x), y0 + a, z0 + b]))
    for y in (y0, y0 + ly):
        a, b = _lattice(lx, lz, spacing, rng, jitter)
        faces.append(np.column_stack([x0 + a, np.full(a.shape, y), z0 + b]))
    return np.concatenate(faces)


def cylinder_surface(base, radius, height, spacing=0.05, rng=None, jitter=0.3, cap=True) -> np.ndarray:
    """Vertical cylinder standing on ``base`` (its bottom-centre point)."""
    rng = rng if rng is not None else np.random.default_rng(0)
    bx, by, bz = base
    circ = 2 * np.pi * radius
    a, b = _lattice(circ, height, spacing, rng, jitter)
    ang = a / radius
    parts = [np.column_stack([bx + radius * np.cos(ang), by + radius * np.sin(ang), bz + b])]
    if cap:
        a, b = _lattice(2 * radius, 2 * radius, spacing, rng, jitter)
        disc = np.column_stack([a - radius, b - radius])
        disc = disc[np.hypot(disc[:, 0], disc[:, 1]) <= radius]
        parts.append(np.column_stack([bx + disc[:, 0], by + disc[:, 1], np.full(len(disc), bz + height)]))
    return np.concatenate(parts)


def fibonacci_sphere(n: int, radius: float = 1.0) -> np.ndarray:
    """Quasi-uniform points on a sphere centred at the origin."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    rho = np.sqrt(1 - z * z)
    phi = np.pi * (3 - np.sqrt(5)) * i
    return radius * np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def corrugated_strip(x0, x1, y0, y1, amplitude, wavelength, spacing=0.05, rng=None, jitter=0.3):
    """Strip along x whose height varies as a sine of x."""
    rng = rng if rng is not None else np.random.default_rng(0)
    a, b = _lattice(x1 - x0, y1 - y0, spacing, rng, jitter)
    x = x0 + a
    z = amplitude * np.sin(2 * np.pi * (x - x0) / wavelength)
    return np.column_stack([x, y0 + b, z])


@dataclass
class Scene:
    """A cloud plus a per-point object label (0 = background)."""

    cloud: PointCloud
    labels: np.ndarray
    names: dict[int, str] = field(default_factory=dict)
    boxes: list = field(default_factory=list)

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def assemble(parts: list[tuple[np.ndarray, int]], names: Optional[dict[int, str]] = None) -> Scene:
    pts = np.concatenate([p for p, _ in parts])
    labels = np.concatenate([np.full(len(p), lab, dtype=np.int64) for p, lab in parts])
    return Scene(PointCloud(pts), labels, dict(names or {}))


def pole_box_scene(seed: int = 0, spacing: float = 0.04) -> Scene:
    """Ground plane with a short 0.4 m wide post and a 2 m box, well apart.

    The post is as tall as it is wide; a tall pole keeps a strong response at
    every radius pair whose large radius reaches the ground.
    """
    rng = np.random.default_rng(seed)
    ground = plane(-8, 8, -5, 5, 0.0, spacing, rng,
                   holes=[(-3.2, -2.8, -0.2, 0.2), (2.0, 4.0, -1.0, 1.0)])
    pole = cylinder_surface((-3.0, 0.0, 0.0), 0.2, 0.4, spacing, rng)
    box = box_surface((3.0, 0.0, 1.0), (2.0, 2.0, 2.0), spacing, rng)
    return assemble([(ground, 0), (pole, 1), (box, 2)], {0: "plane", 1: "pole", 2: "box"})


def street_scene(n_points: int = 200_000, seed: int = 0) -> Scene:
    """Street block: road, curbed sidewalk, facade, parked cars, poles, people.

    Sampling spacing is chosen so the result has roughly ``n_points`` points.
    """
    rng = np.random.default_rng(seed)
    # surface area of the layout below is ~433 m^2
    spacing = float(np.sqrt(433.0 / n_points))

    def build(s):
        parts = []
        parts.append((plane(0, 20, -6, 3, 0.0, s, rng), 0))                       # road
        parts.append((plane(0, 20, 3, 6, 0.15, s, rng), 0))                       # sidewalk
        curb_a, curb_b = _lattice(20, 0.15, s, rng, 0.3)
        parts.append((np.column_stack([curb_a, np.full(curb_a.shape, 3.0), curb_b]), 0))
        facade_a, facade_b = _lattice(20, 6, s, rng, 0.3)
        parts.append((np.column_stack([facade_a, np.full(facade_a.shape, 6.0), 0.15 + facade_b]), 0))
        label = 1
        for cx in (4.0, 11.0):
            parts.append((box_surface((cx, 1.6, 0.75), (4.2, 1.8, 1.5), s, rng), label))
            label += 1
        for px in (2.0, 9.0, 16.0):
            parts.append((cylinder_surface((px, 4.5, 0.15), 0.12, 4.0, s, rng), label))
            label += 1
        for hx in (7.0, 14.5, 18.0):
            parts.append((box_surface((hx, 4.2, 0.15 + 0.85), (0.5, 0.4, 1.7), s, rng), label))
            label += 1
        return parts

    return assemble(build(spacing))


@dataclass
class Frame:
    frame_id: str
    scene: Scene


def segmentation_frames(n_frames: int = 5, objects_per_frame: int = 3, seed: int = 0,
                        spacing: float = 0.05) -> list[Frame]:
    """Frames of upright objects on open ground with their labels.

    Object footprints are not sampled on the ground (they occlude it), and
    objects stand at least 1 m apart.
    """
    from .evaluation import GroundTruthBox

    rng = np.random.default_rng(seed)
    frames = []
    kinds = [("pedestrian", (0.6, 0.6, 1.8)), ("pole", (0.3, 0.3, 2.5)), ("cyclist", (1.2, 0.5, 1.6))]
    for f in range(n_frames):
        centers = []
        while len(centers) < objects_per_frame:
            c = rng.uniform([-6, -6], [6, 6])
            if all(np.hypot(*(c - o)) >= 3.0 for o in centers):
                centers.append(c)
        parts = []
        boxes = []
        holes = []
        for k, c in enumerate(centers, start=1):
            name, (lx, ly, lz) = kinds[(k - 1 + f) % len(kinds)]
            pts = box_surface((c[0], c[1], lz / 2), (lx, ly, lz), spacing, rng)
            parts.append((pts, k))
            holes.append((c[0] - lx / 2, c[0] + lx / 2, c[1] - ly / 2, c[1] + ly / 2))
            # lifted 1 mm so ground points at z = 0 stay outside
            boxes.append(GroundTruthBox(f"{f:06d}", name, (c[0], c[1], (lz + 0.031) / 2),
                                        (lx + 0.05, ly + 0.05, lz + 0.029), 0.0))
        ground = plane(-10, 10, -10, 10, 0.0, spacing, rng, holes=holes)
        scene = assemble([(ground, 0)] + parts, {0: "ground"})
        scene.boxes = boxes
        frames.append(Frame(f"{f:06d}", scene))
    return frames
