"""Domains and subdomains as masks on a uniform Cartesian grid.

A domain is truncated to a rectangular window and represented by the set of
grid points strictly inside both the window and the defining region; the
window boundary layer always acts as a Dirichlet boundary.  Regions are
closed expression trees over open primitives, so membership at a point is
deterministic and side-effect free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadRadii, ConfigError, EmptyMask, GridMismatch


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice covering the truncation window.

    ``counts`` are points per axis including the window boundary, so the
    window extent per axis is ``(count - 1) * spacing``.
    """

    origin: tuple[float, ...]
    spacing: float
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.spacing <= 0:
            raise ConfigError("grid spacing must be positive")
        if not 1 <= len(self.counts) <= 3:
            raise ConfigError("only 1-, 2- or 3-dimensional grids are supported")
        if len(self.origin) != len(self.counts):
            raise ConfigError("origin and counts must have the same dimension")
        if any(n < 3 for n in self.counts):
            raise ConfigError("need at least 3 points per axis")

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def extent(self) -> tuple[float, ...]:
        return tuple((n - 1) * self.spacing for n in self.counts)

    @classmethod
    def from_window(cls, window: Sequence[Sequence[float]], h: float) -> "GridSpec":
        """Build a grid from per-axis (lo, hi) bounds; h must divide each extent."""
        if h <= 0:
            raise ConfigError("h must be positive")
        origin = []
        counts = []
        for lo, hi in window:
            if hi <= lo:
                raise ConfigError(f"empty window axis ({lo}, {hi})")
            n_cells = (hi - lo) / h
            n = round(n_cells)
            if n < 2 or abs(n_cells - n) > 1e-9 * max(1.0, n):
                raise ConfigError(f"h={h} does not divide the window ({lo}, {hi}) evenly")
            origin.append(float(lo))
            counts.append(n + 1)
        return cls(tuple(origin), float(h), tuple(counts))

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.counts[axis])

    def lattice(self) -> np.ndarray:
        """All lattice points as an (N, d) array in row-major order."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def window_interior(self) -> np.ndarray:
        """Boolean array over the lattice, True strictly inside the window."""
        inner = np.ones(self.counts, dtype=bool)
        for a in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[a] = 0
            inner[tuple(sl)] = False
            sl[a] = -1
            inner[tuple(sl)] = False
        return inner


# --- region primitives -------------------------------------------------------

class Region:
    """Open subset of R^d defined by strict pointwise membership."""

    def contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _as_center(center, dim=None) -> np.ndarray:
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if dim is not None and c.size != dim:
        raise ConfigError(f"center has dimension {c.size}, expected {dim}")
    return c


@dataclass(frozen=True)
class Rect(Region):
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ConfigError("rect needs lo < hi per axis")

    def contains(self, pts):
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return np.all((pts > lo) & (pts < hi), axis=-1)


@dataclass(frozen=True)
class Ball(Region):
    center: tuple[float, ...]
    radius: float

    def contains(self, pts):
        if self.radius <= 0:
            return np.zeros(pts.shape[0], dtype=bool)
        d2 = np.sum((pts - _as_center(self.center)) ** 2, axis=-1)
        return d2 < self.radius**2


@dataclass(frozen=True)
class Annulus(Region):
    center: tuple[float, ...]
    r: float
    R: float

    def __post_init__(self):
        if not 0 <= self.r < self.R:
            raise ConfigError("annulus needs 0 <= r < R")

    def contains(self, pts):
        d2 = np.sum((pts - _as_center(self.center)) ** 2, axis=-1)
        return (d2 > self.r**2) & (d2 < self.R**2)


@dataclass(frozen=True)
class Sector(Region):
    """Angular sector of an annulus, 2-D only; angles in radians."""

    center: tuple[float, ...]
    theta0: float
    theta1: float
    r: float
    R: float

    def __post_init__(self):
        if not 0 <= self.r < self.R:
            raise ConfigError("sector needs 0 <= r < R")
        if not self.theta0 < self.theta1:
            raise ConfigError("sector needs theta0 < theta1")

    def contains(self, pts):
        if pts.shape[-1] != 2:
            raise ConfigError("sector regions are 2-D only")
        rel = pts - _as_center(self.center, 2)
        d2 = np.sum(rel**2, axis=-1)
        ang = np.arctan2(rel[..., 1], rel[..., 0])
        # compare angles modulo 2*pi relative to theta0
        span = self.theta1 - self.theta0
        off = np.mod(ang - self.theta0, 2 * math.pi)
        return (d2 > self.r**2) & (d2 < self.R**2) & (off > 0) & (off < span)


@dataclass(frozen=True)
class HalfStrip(Region):
    """{x0 < x} in 1-D, {x0 < x, lo < y < hi} in 2-D."""

    x0: float
    lo: float = 0.0
    hi: float = math.pi

    def __post_init__(self):
        if self.lo >= self.hi:
            raise ConfigError("halfstrip needs lo < hi")

    def contains(self, pts):
        first = pts[..., 0] > self.x0
        if pts.shape[-1] == 1:
            return first
        return first & (pts[..., 1] > self.lo) & (pts[..., 1] < self.hi)


@dataclass(frozen=True)
class Union(Region):
    parts: tuple[Region, ...]

    def contains(self, pts):
        out = np.zeros(pts.shape[0], dtype=bool)
        for p in self.parts:
            out |= p.contains(pts)
        return out


@dataclass(frozen=True)
class Inter(Region):
    parts: tuple[Region, ...]

    def contains(self, pts):
        out = np.ones(pts.shape[0], dtype=bool)
        for p in self.parts:
            out &= p.contains(pts)
        return out


@dataclass(frozen=True)
class Diff(Region):
    left: Region
    right: Region

    def contains(self, pts):
        return self.left.contains(pts) & ~self.right.contains(pts)


@dataclass(frozen=True)
class Complement(Region):
    """Complement within the truncation window (the window clips at build time)."""

    inner: Region

    def contains(self, pts):
        return ~self.inner.contains(pts)


# --- declarative region configs ----------------------------------------------

def parse_region(node) -> Region:
    """Parse a region expression from nested dict/list config data.

    Primitive names are exactly rect, ball, annulus, sector, halfstrip,
    union, inter, diff.  Example: ``{"diff": [{"ball": {"center": [0, 0],
    "radius": 3}}, {"ball": {"center": [0, 0], "radius": 1}}]}``.
    """
    if isinstance(node, Region):
        return node
    if not isinstance(node, dict) or len(node) != 1:
        raise ConfigError(f"region node must be a single-key mapping, got {node!r}")
    name, args = next(iter(node.items()))
    try:
        if name == "rect":
            lo, hi = args
            return Rect(tuple(map(float, np.atleast_1d(lo))), tuple(map(float, np.atleast_1d(hi))))
        if name == "ball":
            return Ball(tuple(np.atleast_1d(args["center"]).astype(float)), float(args["radius"]))
        if name == "annulus":
            return Annulus(tuple(np.atleast_1d(args["center"]).astype(float)),
                           float(args["r"]), float(args["R"]))
        if name == "sector":
            t0, t1 = args["theta"]
            return Sector(tuple(np.atleast_1d(args["center"]).astype(float)),
                          float(t0), float(t1), float(args["r"]), float(args["R"]))
        if name == "halfstrip":
            lo, hi = args.get("y", (0.0, math.pi))
            return HalfStrip(float(args["x0"]), float(lo), float(hi))
        if name == "union":
            return Union(tuple(parse_region(a) for a in args))
        if name == "inter":
            return Inter(tuple(parse_region(a) for a in args))
        if name == "diff":
            left, right = args
            return Diff(parse_region(left), parse_region(right))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad arguments for region '{name}': {exc}") from exc
    raise ConfigError(f"unknown region primitive '{name}'")


# --- masks --------------------------------------------------------------------

@dataclass(eq=False)
class DomainMask:
    """Indicator of interior degrees of freedom over a grid's lattice.

    The window boundary layer is never interior (Dirichlet truncation).
    Instances are immutable after construction and safe to share.
    """

    grid: GridSpec
    interior: np.ndarray
    label: str = ""

    def __eq__(self, other):
        if not isinstance(other, DomainMask):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.interior, other.interior)

    def __post_init__(self):
        arr = np.asarray(self.interior, dtype=bool)
        if arr.shape != self.grid.counts:
            raise GridMismatch("interior array shape does not match the grid")
        arr = arr & self.grid.window_interior()
        arr.flags.writeable = False
        object.__setattr__(self, "interior", arr)

    @property
    def interior_count(self) -> int:
        return int(self.interior.sum())

    def points(self) -> np.ndarray:
        """Coordinates of interior points, (M, d), row-major order."""
        return self.grid.lattice()[self.interior.ravel()]

    def require_nonempty(self):
        if self.interior_count == 0:
            raise EmptyMask(f"mask '{self.label}' has no interior points")
        return self

    def same_grid(self, other: "DomainMask"):
        if self.grid != other.grid:
            raise GridMismatch("masks live on different grids")

    def intersect(self, other: "DomainMask", label: str = "") -> "DomainMask":
        self.same_grid(other)
        return DomainMask(self.grid, self.interior & other.interior, label or self.label)

    def union(self, other: "DomainMask", label: str = "") -> "DomainMask":
        self.same_grid(other)
        return DomainMask(self.grid, self.interior | other.interior, label or self.label)

    def subtract(self, other: "DomainMask", label: str = "") -> "DomainMask":
        self.same_grid(other)
        return DomainMask(self.grid, self.interior & ~other.interior, label or self.label)

    def intersect_region(self, region: Region, label: str = "") -> "DomainMask":
        inside = region.contains(self.grid.lattice()).reshape(self.grid.counts)
        return DomainMask(self.grid, self.interior & inside, label or self.label)

    def minus_closed_ball(self, r: float, center=None, label: str = "") -> "DomainMask":
        """Remove the closed ball |x - center| <= r (Persson puncturing)."""
        c = np.zeros(self.grid.dim) if center is None else _as_center(center, self.grid.dim)
        d2 = np.sum((self.grid.lattice() - c) ** 2, axis=-1).reshape(self.grid.counts)
        return DomainMask(self.grid, self.interior & (d2 > r**2), label or self.label)

    def is_subset_of(self, other: "DomainMask") -> bool:
        self.same_grid(other)
        return bool(np.all(~self.interior | other.interior))


def build_mask(region: Region, grid: GridSpec, label: str = "") -> DomainMask:
    """Mark exactly the grid points strictly inside region and window."""
    inside = region.contains(grid.lattice()).reshape(grid.counts)
    mask = DomainMask(grid, inside, label)
    return mask.require_nonempty()


def full_window_mask(grid: GridSpec, label: str = "window") -> DomainMask:
    return DomainMask(grid, np.ones(grid.counts, dtype=bool), label)


def disjoint(a: DomainMask, b: DomainMask) -> bool:
    """True iff no grid point is interior in both masks."""
    a.same_grid(b)
    return not bool(np.any(a.interior & b.interior))


def ring_union_mask(grid: GridSpec, radii: Sequence[tuple[float, float]], k: int,
                    i: int, base: DomainMask | None = None, center=None) -> DomainMask:
    """Union of the annuli with index congruent to i (mod k), 1-based.

    ``radii`` lists (r_j, R_j) pairs which must interleave strictly:
    r_1 < R_1 < r_2 < R_2 < ...  The result is clipped to ``base`` when given.
    """
    if not 1 <= i <= k:
        raise ConfigError(f"cell index i={i} outside 1..{k}")
    flat = []
    for r, R in radii:
        flat.extend((float(r), float(R)))
    if len(flat) == 0 or any(x >= y for x, y in zip(flat, flat[1:])) or flat[0] < 0:
        raise BadRadii(f"radii not strictly interleaved: {radii}")
    c = np.zeros(grid.dim) if center is None else _as_center(center, grid.dim)
    mine = [(r, R) for j, (r, R) in enumerate(radii, start=1) if j % k == i % k]
    d2 = np.sum((grid.lattice() - c) ** 2, axis=-1).reshape(grid.counts)
    inside = np.zeros(grid.counts, dtype=bool)
    for r, R in mine:
        inside |= (d2 > r**2) & (d2 < R**2)
    if base is not None:
        if base.grid != grid:
            raise GridMismatch("base mask lives on a different grid")
        inside &= base.interior
    return DomainMask(grid, inside, label=f"rings[{i}/{k}]")
