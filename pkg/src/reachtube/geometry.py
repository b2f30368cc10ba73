"""Procedural 2D obstacle scenes and signed-distance evaluation.

Scenes compose primitives (smooth random shapes, discs, boxes, ellipses,
room walls with door gaps) into a single scalar field l(x) that is negative
inside the unsafe set and positive outside.  Union combines by pointwise
min, subtraction by max(a, -b); the subtraction rule is only a lower-bound
distance near carved corners, which is acceptable because downstream use
needs the correct zero sublevel set and a Lipschitz surrogate, not exact
distances everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .grid import Domain, ValueGrid

__all__ = [
    "SmoothShape",
    "Disc",
    "Box",
    "Ellipse",
    "RoomWalls",
    "Scene",
    "VelocityRadiusLaw",
    "convex_hull",
    "bspline_closed",
    "random_smooth_shape",
    "polyline_sdf",
    "rasterize_l",
    "gen_indoor_scene",
    "velocity_radius",
    "minkowski_difference_hull",
    "scene_to_json",
    "scene_from_json",
    "INDOOR_RANGES",
]

BSPLINE_SAMPLES = 256


# -- convex hull ------------------------------------------------------------

def convex_hull(points) -> np.ndarray:
    """Convex hull vertices in CCW order, collinear interior points dropped.

    Monotone-chain construction.  Raises if fewer than 3 distinct points or
    all points collinear.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    if pts.shape[0] < 3:
        raise ValueError("convex hull needs at least 3 points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.diff(pts, axis=0) != 0.0, axis=1)
    pts = pts[keep]
    if len(pts) < 3:
        raise ValueError("convex hull needs at least 3 distinct points")

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def build(seq):
        h: list = []
        for p in seq:
            while len(h) >= 2 and cross(h[-2], h[-1], p) <= 0.0:
                h.pop()
            h.append(p)
        return h

    lower = build(pts)
    upper = build(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise ValueError("all points collinear; hull is degenerate")
    return hull


# -- closed cubic B-spline --------------------------------------------------

def bspline_closed(control: np.ndarray, samples: int = BSPLINE_SAMPLES) -> np.ndarray:
    """Densely evaluate the closed uniform cubic B-spline of a control polygon.

    Per-segment cubic polynomial form: on segment i with parameter t in
    [0,1), the point is the basis-weighted combination of control points
    i-1, i, i+1, i+2 (cyclic).  Returns (samples, 2); the curve closes
    implicitly (no duplicated endpoint).
    """
    p = np.asarray(control, dtype=float)
    m = len(p)
    if m < 3:
        raise ValueError("need at least 3 control points")
    u = np.arange(samples) * (m / samples)
    seg = np.floor(u).astype(int)
    t = u - seg
    t2 = t * t
    t3 = t2 * t
    b0 = (1.0 - t) ** 3 / 6.0
    b1 = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0
    b2 = (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0
    b3 = t3 / 6.0
    def ctrl(k):
        return p[(seg + k) % m]

    return (
        b0[:, None] * ctrl(-1)
        + b1[:, None] * ctrl(0)
        + b2[:, None] * ctrl(1)
        + b3[:, None] * ctrl(2)
    )


# -- polyline signed distance ----------------------------------------------

def polyline_sdf(boundary: np.ndarray, points: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Signed distance to a simple closed polyline (negative inside).

    Distance is the min over segments; the sign comes from even-odd ray
    casting along +x.  ``boundary`` is (m, 2) with implicit closure.
    """
    a = np.asarray(boundary, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    b = np.roll(a, -1, axis=0)
    e = b - a
    ee = np.einsum("ij,ij->i", e, e)
    ee = np.where(ee == 0.0, 1.0, ee)

    out = np.empty(len(pts), dtype=float)
    for s in range(0, len(pts), chunk):
        q = pts[s : s + chunk]
        w = q[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("nmj,mj->nm", w, e) / ee, 0.0, 1.0)
        diff = w - t[:, :, None] * e[None, :, :]
        d2 = np.einsum("nmj,nmj->nm", diff, diff).min(axis=1)

        ay, by = a[:, 1], b[:, 1]
        straddle = (ay[None, :] > q[:, 1:2]) != (by[None, :] > q[:, 1:2])
        denom = np.where(e[:, 1] == 0.0, 1.0, e[:, 1])
        x_at = a[None, :, 0] + (q[:, 1:2] - ay[None, :]) * (e[None, :, 0] / denom[None, :])
        crossings = (straddle & (x_at > q[:, 0:1])).sum(axis=1)
        inside = crossings % 2 == 1
        out[s : s + chunk] = np.where(inside, -1.0, 1.0) * np.sqrt(d2)
    return out


# -- primitives -------------------------------------------------------------

@dataclass(frozen=True)
class SmoothShape:
    """Convex blob: hull of random radial control points, B-spline smoothed."""

    control_points: np.ndarray
    boundary: np.ndarray

    def sdf(self, points: np.ndarray) -> np.ndarray:
        return polyline_sdf(self.boundary, points)

    def translated(self, offset) -> "SmoothShape":
        off = np.asarray(offset, dtype=float)
        return SmoothShape(self.control_points + off, self.boundary + off)


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float

    def sdf(self, points: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(points) - np.asarray(self.center)
        return np.hypot(p[:, 0], p[:, 1]) - self.radius


def _rotate_into(points, center, rotation):
    p = np.atleast_2d(points) - np.asarray(center, dtype=float)
    c, s = np.cos(-rotation), np.sin(-rotation)
    return np.column_stack([c * p[:, 0] - s * p[:, 1], s * p[:, 0] + c * p[:, 1]])


@dataclass(frozen=True)
class Box:
    center: tuple[float, float]
    half_extents: tuple[float, float]
    rotation: float = 0.0

    def sdf(self, points: np.ndarray) -> np.ndarray:
        q = np.abs(_rotate_into(points, self.center, self.rotation)) - np.asarray(
            self.half_extents
        )
        outside = np.hypot(np.maximum(q[:, 0], 0.0), np.maximum(q[:, 1], 0.0))
        inside = np.minimum(np.maximum(q[:, 0], q[:, 1]), 0.0)
        return outside + inside


@dataclass(frozen=True)
class Ellipse:
    """Approximate ellipse SDF (sign-exact, near-exact distance at boundary)."""

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    rotation: float = 0.0

    def sdf(self, points: np.ndarray) -> np.ndarray:
        q = _rotate_into(points, self.center, self.rotation)
        r = np.asarray(self.semi_axes, dtype=float)
        k0 = np.hypot(q[:, 0] / r[0], q[:, 1] / r[1])
        k1 = np.hypot(q[:, 0] / r[0] ** 2, q[:, 1] / r[1] ** 2)
        at_center = k1 == 0.0
        k1 = np.where(at_center, 1.0, k1)
        return np.where(at_center, -r.min(), k0 * (k0 - 1.0) / k1)


@dataclass(frozen=True)
class RoomWalls:
    """Rectangular wall ring with door gaps carved out.

    ``doors`` entries are (side, offset, width): side 0..3 = east, north,
    west, south; offset runs along the wall from its center.
    """

    center: tuple[float, float]
    half_extents: tuple[float, float]
    thickness: float
    doors: tuple = ()

    def sdf(self, points: np.ndarray) -> np.ndarray:
        outer = Box(self.center, self.half_extents).sdf(points)
        inner_he = (
            self.half_extents[0] - self.thickness,
            self.half_extents[1] - self.thickness,
        )
        d = np.maximum(outer, -Box(self.center, inner_he).sdf(points))
        for side, offset, width in self.doors:
            d = np.maximum(d, -self._door_box(side, offset, width).sdf(points))
        return d

    def _door_box(self, side: int, offset: float, width: float) -> Box:
        cx, cy = self.center
        hx, hy = self.half_extents
        # gap spans the wall thickness with a little slack so the cut is clean
        t = self.thickness / 2.0 + 0.05 * self.thickness
        if side == 0:
            return Box((cx + hx - self.thickness / 2.0, cy + offset), (t, width / 2.0))
        if side == 1:
            return Box((cx + offset, cy + hy - self.thickness / 2.0), (width / 2.0, t))
        if side == 2:
            return Box((cx - hx + self.thickness / 2.0, cy + offset), (t, width / 2.0))
        if side == 3:
            return Box((cx + offset, cy - hy + self.thickness / 2.0), (width / 2.0, t))
        raise ValueError(f"door side must be 0..3, got {side}")


# -- scene ------------------------------------------------------------------

@dataclass(frozen=True)
class Scene:
    """Ordered composition of primitives; left fold of union/subtract rules."""

    primitives: tuple
    modes: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        if len(self.primitives) == 0:
            raise ValueError("scene needs at least one primitive")
        modes = self.modes if self.modes else ("union",) * len(self.primitives)
        if len(modes) != len(self.primitives):
            raise ValueError("one combine mode per primitive")
        for m in modes:
            if m not in ("union", "subtract"):
                raise ValueError(f"unknown combine mode {m!r}")
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "modes", tuple(modes))

    def sdf(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.full(len(pts), np.inf)
        for prim, mode in zip(self.primitives, self.modes):
            di = prim.sdf(pts)
            d = np.minimum(d, di) if mode == "union" else np.maximum(d, -di)
        return d

    def sdf_at(self, x: float, y: float) -> float:
        return float(self.sdf(np.array([[x, y]]))[0])


def rasterize_l(scene: Scene, domain: Domain, shape) -> ValueGrid:
    """Evaluate the scene SDF on every node of a 2D grid."""
    if domain.ndim != 2:
        raise ValueError("rasterize_l expects a 2D domain")
    shape = tuple(int(n) for n in np.atleast_1d(shape))
    g = ValueGrid(domain, np.zeros(shape), copy=False)
    x1 = g.axis_coordinates(0)
    x2 = g.axis_coordinates(1)
    mx, my = np.meshgrid(x1, x2, indexing="ij")
    pts = np.column_stack([mx.ravel(), my.ravel()])
    return ValueGrid(domain, scene.sdf(pts).reshape(shape), copy=False)


# -- random smooth shapes ---------------------------------------------------

def random_smooth_shape(
    rng,
    n_angles: int = 12,
    r_min: float = 1.0,
    r_max: float = 3.5,
    center=(0.0, 0.0),
    _radii_override=None,
) -> SmoothShape:
    """Random convex blob: radii at evenly spaced angles, hull, B-spline.

    ``rng`` is an integer seed or a numpy Generator.  ``_radii_override`` is
    a test hook forcing the sampled radii (e.g. all equal for circle-band
    checks).
    """
    if n_angles < 4:
        raise ValueError("need at least 4 angles")
    if not 0.0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    gen = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    center = np.asarray(center, dtype=float)
    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    for _ in range(16):
        if _radii_override is not None:
            radii = np.broadcast_to(np.asarray(_radii_override, float), (n_angles,))
        else:
            radii = gen.uniform(r_min, r_max, size=n_angles)
        pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        try:
            hull = convex_hull(pts)
        except ValueError:
            if _radii_override is not None:
                raise
            continue
        boundary = bspline_closed(hull) + center
        return SmoothShape(hull + center, boundary)
    raise ValueError("could not build a non-degenerate hull")


def minkowski_difference_hull(
    shape_a: SmoothShape, shape_b: SmoothShape, rotation: float
) -> np.ndarray:
    """Hull of {a - R(rotation) b} over boundary samples of two shapes.

    The signed distance from a relative offset to this hull is the signed
    separation between shape_a held fixed and shape_b rotated by
    ``rotation`` and translated by that offset: offsets inside the hull are
    exactly the ones where the (convex) shapes overlap.
    """
    c, s = np.cos(rotation), np.sin(rotation)
    b = shape_b.boundary
    rb = np.column_stack([c * b[:, 0] - s * b[:, 1], s * b[:, 0] + c * b[:, 1]])
    diffs = shape_a.boundary[:, None, :] - rb[None, :, :]
    return convex_hull(diffs.reshape(-1, 2))


# -- velocity-dependent radius law -----------------------------------------

@dataclass(frozen=True)
class VelocityRadiusLaw:
    kind: str
    r0: float
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in ("exponential", "logarithmic"):
            raise ValueError(f"unknown law kind {self.kind!r}")
        if self.r0 <= 0 or self.a < 0 or self.b < 0:
            raise ValueError("need r0 > 0 and a, b >= 0")


def velocity_radius(law: VelocityRadiusLaw, v) -> np.ndarray:
    """Obstacle radius as a monotone function of speed."""
    v = np.asarray(v, dtype=float)
    if law.kind == "exponential":
        return law.r0 + law.a * (np.exp(law.b * v) - 1.0)
    return law.r0 + law.a * np.log1p(law.b * v)


# -- indoor environment generator ------------------------------------------

# All lengths are in state units of the default [-5, 5]^2 spatial domain and
# scale linearly with domain half-width / 5 for other domains.
INDOOR_RANGES = {
    "room_center": (-0.4, 0.4),
    "room_half_extent": (2.9, 4.1),
    "wall_thickness": (0.3, 0.5),
    "n_doors": (1, 2),
    "door_width": (0.9, 1.6),
    "door_corner_margin": 0.4,
    "n_clutter": (1, 3),
    "clutter_kinds": ("disc", "box", "ellipse"),
    "disc_radius": (0.4, 0.9),
    "box_half_extent": (0.35, 0.8),
    "ellipse_semi_axis": (0.35, 0.9),
    "clutter_wall_margin": 0.6,
}


def gen_indoor_scene(seed: int, domain_half_width: float = 5.0) -> Scene:
    """Random room: wall ring, 1-2 door gaps, 1-3 interior obstacles.

    Parameter ranges are the documented INDOOR_RANGES table.  Deterministic
    per seed.
    """
    rng = np.random.default_rng(seed)
    sc = domain_half_width / 5.0
    rr = INDOOR_RANGES

    cx, cy = rng.uniform(*rr["room_center"], size=2) * sc
    hx, hy = rng.uniform(*rr["room_half_extent"], size=2) * sc
    thickness = rng.uniform(*rr["wall_thickness"]) * sc

    n_doors = int(rng.integers(rr["n_doors"][0], rr["n_doors"][1] + 1))
    sides = rng.choice(4, size=n_doors, replace=False)
    doors = []
    for side in sides:
        width = rng.uniform(*rr["door_width"]) * sc
        half_span = (hy if side in (0, 2) else hx) - thickness
        lim = half_span - width / 2.0 - rr["door_corner_margin"] * sc
        lim = max(lim, 0.1 * sc)
        doors.append((int(side), float(rng.uniform(-lim, lim)), float(width)))

    primitives: list = [RoomWalls((cx, cy), (hx, hy), thickness, tuple(doors))]
    modes = ["union"]

    margin = rr["clutter_wall_margin"] * sc
    n_clutter = int(rng.integers(rr["n_clutter"][0], rr["n_clutter"][1] + 1))
    for _ in range(n_clutter):
        kind = rr["clutter_kinds"][int(rng.integers(len(rr["clutter_kinds"])))]
        px = rng.uniform(cx - hx + thickness + margin, cx + hx - thickness - margin)
        py = rng.uniform(cy - hy + thickness + margin, cy + hy - thickness - margin)
        if kind == "disc":
            primitives.append(Disc((px, py), rng.uniform(*rr["disc_radius"]) * sc))
        elif kind == "box":
            he = rng.uniform(*rr["box_half_extent"], size=2) * sc
            primitives.append(Box((px, py), tuple(he), rng.uniform(0, np.pi)))
        else:
            ax = rng.uniform(*rr["ellipse_semi_axis"], size=2) * sc
            primitives.append(Ellipse((px, py), tuple(ax), rng.uniform(0, np.pi)))
        modes.append("union")

    return Scene(tuple(primitives), tuple(modes), seed=int(seed))


# -- human-readable scene serialization -------------------------------------

def _primitive_to_dict(prim) -> dict:
    if isinstance(prim, SmoothShape):
        return {
            "kind": "smooth_shape",
            "control_points": prim.control_points.tolist(),
            "boundary_samples": len(prim.boundary),
        }
    if isinstance(prim, Disc):
        return {"kind": "disc", "center": list(prim.center), "radius": prim.radius}
    if isinstance(prim, Box):
        return {
            "kind": "box",
            "center": list(prim.center),
            "half_extents": list(prim.half_extents),
            "rotation": prim.rotation,
        }
    if isinstance(prim, Ellipse):
        return {
            "kind": "ellipse",
            "center": list(prim.center),
            "semi_axes": list(prim.semi_axes),
            "rotation": prim.rotation,
        }
    if isinstance(prim, RoomWalls):
        return {
            "kind": "room_walls",
            "center": list(prim.center),
            "half_extents": list(prim.half_extents),
            "thickness": prim.thickness,
            "doors": [list(d) for d in prim.doors],
        }
    raise TypeError(f"unknown primitive type {type(prim).__name__}")


def _primitive_from_dict(d: dict):
    kind = d["kind"]
    if kind == "smooth_shape":
        cp = np.asarray(d["control_points"], dtype=float)
        return SmoothShape(cp, bspline_closed(cp, d.get("boundary_samples", BSPLINE_SAMPLES)))
    if kind == "disc":
        return Disc(tuple(d["center"]), d["radius"])
    if kind == "box":
        return Box(tuple(d["center"]), tuple(d["half_extents"]), d.get("rotation", 0.0))
    if kind == "ellipse":
        return Ellipse(tuple(d["center"]), tuple(d["semi_axes"]), d.get("rotation", 0.0))
    if kind == "room_walls":
        return RoomWalls(
            tuple(d["center"]),
            tuple(d["half_extents"]),
            d["thickness"],
            tuple(tuple(x) for x in d["doors"]),
        )
    raise ValueError(f"unknown primitive kind {kind!r}")


def scene_to_json(scene: Scene) -> str:
    payload = {
        "format": "reachtube-scene",
        "version": 1,
        "seed": scene.seed,
        "primitives": [
            dict(_primitive_to_dict(p), mode=m)
            for p, m in zip(scene.primitives, scene.modes)
        ],
    }
    return json.dumps(payload, indent=2)


def scene_from_json(text: str) -> Scene:
    payload = json.loads(text)
    if payload.get("format") != "reachtube-scene":
        raise ValueError("not a scene file (missing format tag)")
    prims = [_primitive_from_dict(d) for d in payload["primitives"]]
    modes = [d.get("mode", "union") for d in payload["primitives"]]
    return Scene(tuple(prims), tuple(modes), seed=payload.get("seed"))
