"""Simulated fan-beam scanning of 2D ellipse phantoms.

Rays are traced through a centered pixel grid; each ray yields a sparse
constraint row of pixel intersection lengths, and the right-hand side is the
row's inner product with the digitized phantom (optionally noised per ray).
Geometry: the grid is centered on the origin, row 0 at the top; sources sit
on a circle and each projection fans its rays symmetrically around the
direction to the origin.
"""

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .system import ConstraintSystem, ImageVector, SparseRow, _row_dots


@dataclass(frozen=True)
class PixelGrid:
    width: int
    height: int
    pixel_size: float

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.pixel_size <= 0:
            raise ValueError("grid needs positive dimensions and pixel size")

    @property
    def x_min(self):
        return -0.5 * self.width * self.pixel_size

    @property
    def y_max(self):
        return 0.5 * self.height * self.pixel_size

    @property
    def circumradius(self):
        return 0.5 * self.pixel_size * math.hypot(self.width, self.height)

    def pixel_centers(self):
        s = self.pixel_size
        cx = self.x_min + s * (np.arange(self.width) + 0.5)
        cy = self.y_max - s * (np.arange(self.height) + 0.5)
        return cx, cy


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    ax: float
    ay: float
    rot: float
    density: float

    def __post_init__(self):
        if self.ax <= 0 or self.ay <= 0:
            raise ValueError("ellipse semi-axes must be positive")


class EllipsePhantom:
    """Additive overlay of ellipses; density at a point is the sum over the
    ellipses containing it."""

    def __init__(self, ellipses):
        self.ellipses = list(ellipses)

    @classmethod
    def from_file(cls, path):
        """One ellipse per line: cx cy ax ay rot density ('#' comments)."""
        ellipses = []
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = [float(tok) for tok in line.split()]
                if len(parts) != 6:
                    raise ValueError(f"{path}: want 6 numbers per ellipse, got {len(parts)}")
                ellipses.append(Ellipse(*parts))
        return cls(ellipses)

    @classmethod
    def head_default(cls):
        """The bundled 4-ellipse head-like phantom (shell + three interior
        features)."""
        ref = resources.files("dfsup").joinpath("data/head4.txt")
        with resources.as_file(ref) as path:
            return cls.from_file(path)

    def to_file(self, path):
        with open(path, "w") as fh:
            fh.write("# cx cy ax ay rot density\n")
            for e in self.ellipses:
                fh.write(f"{e.cx!r} {e.cy!r} {e.ax!r} {e.ay!r} {e.rot!r} {e.density!r}\n")

    def rotated(self, angle):
        """The same phantom rotated by `angle` about the origin."""
        c, s = math.cos(angle), math.sin(angle)
        out = []
        for e in self.ellipses:
            out.append(
                Ellipse(
                    c * e.cx - s * e.cy,
                    s * e.cx + c * e.cy,
                    e.ax,
                    e.ay,
                    e.rot + angle,
                    e.density,
                )
            )
        return EllipsePhantom(out)

    def density_at(self, px, py):
        px = np.asarray(px, dtype=np.float64)
        py = np.asarray(py, dtype=np.float64)
        out = np.zeros(px.shape)
        for e in self.ellipses:
            c, s = math.cos(e.rot), math.sin(e.rot)
            dx = px - e.cx
            dy = py - e.cy
            u = (c * dx + s * dy) / e.ax
            v = (-s * dx + c * dy) / e.ay
            out += np.where(u * u + v * v <= 1.0, e.density, 0.0)
        return out


@dataclass(frozen=True)
class FanGeometry:
    """Divergent-beam layout: sources on a circle, one fan per projection."""

    projections: int
    rays_per_projection: int
    source_radius: float
    fan_increment: float
    angle_offset: float = 0.0

    def __post_init__(self):
        if self.projections < 1 or self.rays_per_projection < 1:
            raise ValueError("need at least one projection and one ray")
        if self.source_radius <= 0 or self.fan_increment <= 0:
            raise ValueError("source radius and fan increment must be positive")

    @classmethod
    def for_grid(cls, grid, projections, rays_per_projection, source_radius=None,
                 fan_increment=None, angle_offset=0.0):
        """Defaults: sources at twice the grid circumradius, fan spanning the
        circumcircle, so only near-tangent corner rays can miss the grid."""
        r = grid.circumradius
        if source_radius is None:
            source_radius = 2.0 * r
        if source_radius <= r:
            raise ValueError("source radius must exceed the grid circumradius")
        if fan_increment is None:
            fan_increment = 2.0 * math.asin(r / source_radius) / rays_per_projection
        return cls(projections, rays_per_projection, source_radius, fan_increment, angle_offset)

    @property
    def ray_count(self):
        return self.projections * self.rays_per_projection

    def rays(self):
        """Yield (ray_id, source, direction) in projection-major order."""
        P, M = self.projections, self.rays_per_projection
        for p in range(P):
            theta = self.angle_offset + 2.0 * math.pi * p / P
            sx = self.source_radius * math.cos(theta)
            sy = self.source_radius * math.sin(theta)
            central = theta + math.pi
            for r in range(M):
                alpha = central + (r - 0.5 * (M - 1)) * self.fan_increment
                yield p * M + r, (sx, sy), (math.cos(alpha), math.sin(alpha))

    def rotated(self, angle):
        return FanGeometry(
            self.projections,
            self.rays_per_projection,
            self.source_radius,
            self.fan_increment,
            self.angle_offset + angle,
        )


@dataclass(frozen=True)
class NoiseModel:
    """Multiplicative per-ray noise: h_i * (1 + sigma * g), g standard normal.

    Draws are indexed by candidate ray id, so dropped rays do not shift the
    noise applied to the others.
    """

    sigma: float
    seed: int = 0


def rasterize(grid, phantom):
    """Digitize by pixel-center sampling."""
    cx, cy = grid.pixel_centers()
    px, py = np.meshgrid(cx, cy)
    values = phantom.density_at(px, py).ravel()
    return ImageVector(values, grid.width, grid.height)


def trace_ray(grid, source, direction):
    """Intersection lengths of one ray with every grid pixel.

    Parametric boundary-crossing traversal: the crossing parameters with all
    pixel edge lines inside the grid slab are merged and each segment is
    assigned to the pixel containing its midpoint.  The lengths of a ray that
    hits the grid sum to its chord through the bounding box; a ray that
    misses yields an empty row.
    """
    sx, sy = float(source[0]), float(source[1])
    dx, dy = float(direction[0]), float(direction[1])
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise ValueError("ray direction must be nonzero")
    dx /= norm
    dy /= norm

    s = grid.pixel_size
    x_min, y_max = grid.x_min, grid.y_max
    x_max = x_min + s * grid.width
    y_min = y_max - s * grid.height

    t0, t1 = -math.inf, math.inf
    for pos, d, lo, hi in ((sx, dx, x_min, x_max), (sy, dy, y_min, y_max)):
        if d == 0.0:
            if pos < lo or pos > hi:
                return SparseRow([])
        else:
            ta, tb = (lo - pos) / d, (hi - pos) / d
            if ta > tb:
                ta, tb = tb, ta
            t0, t1 = max(t0, ta), min(t1, tb)
    if t1 <= t0:
        return SparseRow([])

    crossings = [np.array([t0, t1])]
    if dx != 0.0:
        tx = (x_min + s * np.arange(grid.width + 1) - sx) / dx
        crossings.append(tx[(tx > t0) & (tx < t1)])
    if dy != 0.0:
        ty = (y_max - s * np.arange(grid.height + 1) - sy) / dy
        crossings.append(ty[(ty > t0) & (ty < t1)])
    ts = np.unique(np.concatenate(crossings))

    mids = 0.5 * (ts[:-1] + ts[1:])
    mx = sx + mids * dx
    my = sy + mids * dy
    cols = np.clip(np.floor((mx - x_min) / s).astype(np.int64), 0, grid.width - 1)
    rows = np.clip(np.floor((y_max - my) / s).astype(np.int64), 0, grid.height - 1)
    j = rows * grid.width + cols
    lengths = np.diff(ts)

    uniq, inv = np.unique(j, return_inverse=True)
    sums = np.bincount(inv, weights=lengths)
    keep = sums > 0.0
    return SparseRow.from_arrays(uniq[keep], sums[keep])


def generate(grid, geometry, phantom, noise=None):
    """Simulate a scan: trace all rays, digitize the phantom, compute h.

    Returns (system, phantom_image).  Rays that miss the grid are dropped
    with an audit count.  The h values use the same row-dot reduction as the
    residual computation, so the noiseless system is exactly consistent with
    the returned image.
    """
    phantom_image = rasterize(grid, phantom)
    rows, ray_ids = [], []
    for rid, src, dirn in geometry.rays():
        row = trace_ray(grid, src, dirn)
        if len(row):
            rows.append(row)
            ray_ids.append(rid)
    if not rows:
        raise ValueError("no ray intersects the grid; check the geometry")

    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate([r.cols for r in rows])
    data = np.concatenate([r.vals for r in rows])
    rhs = _row_dots(indptr, indices, data, phantom_image.values)

    ray_ids = np.asarray(ray_ids, dtype=np.int64)
    if noise is not None and noise.sigma != 0.0:
        g = np.random.default_rng(noise.seed).standard_normal(geometry.ray_count)
        rhs = rhs * (1.0 + noise.sigma * g[ray_ids])

    dropped = geometry.ray_count - len(rows)
    system = ConstraintSystem(
        grid.width * grid.height, indptr, indices, data, rhs, ray_ids, dropped
    )
    return system, phantom_image


def write_pgm(image, path):
    """8-bit binary PGM; gray = round(255*(v-min)/(max-min)), with the data
    min/max kept in a '<path>.minmax.txt' sidecar so values stay recoverable."""
    v = image.values
    vmin, vmax = float(v.min()), float(v.max())
    if vmax > vmin:
        gray = np.rint(255.0 * (v - vmin) / (vmax - vmin)).astype(np.uint8)
    else:
        gray = np.zeros(v.size, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.width} {image.height}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())
    with open(f"{path}.minmax.txt", "w") as fh:
        fh.write(f"min {vmin!r}\nmax {vmax!r}\n")
