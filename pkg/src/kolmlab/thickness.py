"""Observability-set descriptors and thickness certification.

A set O in R^n is (delta, r)-thick when every point y has a companion
y' with the closed ball B(y', r) inside O and |y - y'| <= delta.  The
checker works with the admissible-center region {y' : B(y', r) in O}:
O is thick for delta exactly when no point lies farther than delta from
that region.

Analytic variants (full space, half space, periodic balls, periodic
boxes) get closed-form distances; the periodic mask variant uses binary
erosion plus a Euclidean distance transform on a tiled cell.  Periodic
variants are certified by sampling one fundamental cell: the distance
field is 1-Lipschitz, so a sampled supremum is accurate to about one
sampling step.  A "thick" verdict therefore certifies the sampled
points; a "not thick" verdict ships a concrete counterexample point
whose distance (exact for analytic variants) exceeds delta.

Descriptors serialize to a small JSON text format (see ``to_text``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi

from .errors import DataError, GeometryError
from .grid import PhaseGrid


@dataclass(frozen=True)
class FullSpace:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise DataError("dim must be >= 1")


@dataclass(frozen=True)
class HalfSpace:
    """{z : normal . z > offset}; not thick for any (delta, r)."""

    normal: tuple
    offset: float

    def __post_init__(self):
        normal = tuple(float(c) for c in self.normal)
        if len(normal) < 1 or not any(c != 0.0 for c in normal):
            raise DataError("normal must be a nonzero vector")
        object.__setattr__(self, "normal", normal)

    @property
    def dim(self) -> int:
        return len(self.normal)


@dataclass(frozen=True)
class PeriodicBalls:
    """Closed balls of one radius at `centers` in a cell, repeated with `period`."""

    period: tuple
    centers: tuple
    radius: float

    def __post_init__(self):
        period = tuple(float(p) for p in self.period)
        if any(p <= 0 for p in period):
            raise DataError("periods must be > 0")
        centers = tuple(tuple(float(c) for c in pt) for pt in self.centers)
        if not centers:
            raise DataError("need at least one center")
        if any(len(pt) != len(period) for pt in centers):
            raise DataError("center dimension does not match period")
        if not (0 < self.radius):
            raise DataError("radius must be > 0")
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "centers", centers)

    @property
    def dim(self) -> int:
        return len(self.period)


@dataclass(frozen=True)
class PeriodicMask:
    """Boolean indicator sampled on a uniform grid over one periodic cell."""

    period: tuple
    values: np.ndarray

    def __post_init__(self):
        period = tuple(float(p) for p in self.period)
        if any(p <= 0 for p in period):
            raise DataError("periods must be > 0")
        values = np.asarray(self.values, dtype=bool)
        if values.ndim != len(period):
            raise DataError("mask rank does not match period length")
        object.__setattr__(self, "period", period)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return len(self.period)


@dataclass(frozen=True)
class UnionBoxes:
    """Axis-aligned boxes [lo, hi]; periodically repeated when `period` is set."""

    boxes: tuple
    period: tuple | None = None

    def __post_init__(self):
        boxes = tuple(
            (tuple(float(a) for a in lo), tuple(float(b) for b in hi))
            for lo, hi in self.boxes
        )
        if not boxes:
            raise DataError("need at least one box")
        dim = len(boxes[0][0])
        for lo, hi in boxes:
            if len(lo) != dim or len(hi) != dim:
                raise DataError("box dimensions are inconsistent")
            if any(b <= a for a, b in zip(lo, hi)):
                raise DataError("boxes must have positive extent")
        if self.period is not None:
            period = tuple(float(p) for p in self.period)
            if len(period) != dim or any(p <= 0 for p in period):
                raise DataError("period must be positive and match box dimension")
            object.__setattr__(self, "period", period)
        object.__setattr__(self, "boxes", boxes)

    @property
    def dim(self) -> int:
        return len(self.boxes[0][0])

    @property
    def periodic(self) -> bool:
        return self.period is not None


@dataclass(frozen=True)
class ThicknessVerdict:
    thick: bool
    delta: float
    r: float
    sampling_step: float
    worst_distance: float
    counterexample: tuple | None


@dataclass(frozen=True)
class GridMask:
    """Indicator of a set sampled on a phase grid, with its quadrature measure."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=bool)
        if values.shape != self.grid.shape:
            raise DataError("mask shape does not match grid")
        object.__setattr__(self, "values", values)

    @property
    def measure(self) -> float:
        g = self.grid
        return float(np.count_nonzero(self.values) * g.spacing**g.n_axes)


# ---------------------------------------------------------------------------
# admissible-center distance fields


def _cell_samples(period, step):
    axes = [np.arange(0.0, p, step) for p in period]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return pts.reshape(-1, len(period))


def _dist_periodic_balls(desc: PeriodicBalls, r: float, pts: np.ndarray) -> np.ndarray:
    """Distance from pts to {y' : B(y', r) in O}, single-ball containment.

    A ball of radius r fits inside a single lattice ball iff its center
    is within radius - r of that ball's center; for non-overlapping
    lattices this is the exact admissible region.
    """
    fit = desc.radius - r
    if fit < 0:
        raise GeometryError(
            f"probe radius r={r} exceeds ball radius {desc.radius}; no admissible centers"
        )
    period = np.asarray(desc.period)
    offsets = np.stack(
        np.meshgrid(*[np.array([-1.0, 0.0, 1.0])] * desc.dim, indexing="ij"), axis=-1
    ).reshape(-1, desc.dim)
    best = np.full(pts.shape[0], np.inf)
    for c in desc.centers:
        base = np.asarray(c)
        for off in offsets:
            shift = base + off * period
            dist = np.linalg.norm(pts - shift, axis=1)
            best = np.minimum(best, np.maximum(dist - fit, 0.0))
    return best


def _dist_union_boxes(desc: UnionBoxes, r: float, pts: np.ndarray) -> np.ndarray:
    """Distance to shrunk boxes [lo + r, hi - r], periodically repeated."""
    period = np.asarray(desc.period)
    offsets = np.stack(
        np.meshgrid(*[np.array([-1.0, 0.0, 1.0])] * desc.dim, indexing="ij"), axis=-1
    ).reshape(-1, desc.dim)
    best = np.full(pts.shape[0], np.inf)
    any_box = False
    for lo, hi in desc.boxes:
        lo_s = np.asarray(lo) + r
        hi_s = np.asarray(hi) - r
        if np.any(hi_s < lo_s):
            continue
        any_box = True
        for off in offsets:
            shift = off * period
            clamped = np.clip(pts, lo_s + shift, hi_s + shift)
            best = np.minimum(best, np.linalg.norm(pts - clamped, axis=1))
    if not any_box:
        raise GeometryError(f"probe radius r={r} leaves no admissible centers in any box")
    return best


def _dist_periodic_mask(desc: PeriodicMask, r: float, step: float) -> np.ndarray:
    """Distance field on the mask's own cell grid via erosion + EDT.

    Strict ball containment on a sampled set is realized by eroding with
    a disk one sampling step smaller than r.  Periodicity is handled by
    tiling the cell three times per axis and keeping the central tile.
    """
    cell_steps = [p / s for p, s in zip(desc.period, desc.values.shape)]
    if abs(max(cell_steps) - min(cell_steps)) > 1e-9 * max(cell_steps):
        raise GeometryError("mask cell must have equal spacing per axis")
    h = cell_steps[0]
    r_px = max(0, int(np.ceil(r / h)) - 1)
    tiled = np.tile(desc.values, (3,) * desc.dim)
    if r_px > 0:
        coords = np.stack(
            np.meshgrid(*[np.arange(-r_px, r_px + 1)] * desc.dim, indexing="ij"), axis=-1
        )
        ball = np.sum(coords**2, axis=-1) <= r_px**2
        admissible = ndi.binary_erosion(tiled, structure=ball, border_value=0)
    else:
        admissible = tiled
    dist = ndi.distance_transform_edt(~admissible, sampling=h)
    center = tuple(slice(s, 2 * s) for s in desc.values.shape)
    return np.asarray(dist[center])


# ---------------------------------------------------------------------------
# public operations


def minimal_delta(desc, r: float, sampling_step: float = 1e-2) -> float:
    """Smallest delta for which the set is (delta, r)-thick, from cell sampling.

    Accuracy: the distance field is 1-Lipschitz, so the sampled supremum
    over one fundamental cell is within one sampling step (times sqrt(n)/2)
    of the true value.
    """
    value, _ = _worst_point(desc, r, sampling_step)
    return value


def _worst_point(desc, r, step):
    if r <= 0:
        raise DataError("probe radius r must be > 0")
    if isinstance(desc, FullSpace):
        return 0.0, None
    if isinstance(desc, HalfSpace):
        raise GeometryError("half space is not thick; minimal delta is unbounded")
    if isinstance(desc, PeriodicBalls):
        pts = _cell_samples(desc.period, step)
        dist = _dist_periodic_balls(desc, r, pts)
    elif isinstance(desc, UnionBoxes):
        if not desc.periodic:
            raise GeometryError(
                "non-periodic box unions cannot be certified over all of R^n"
            )
        pts = _cell_samples(desc.period, step)
        dist = _dist_union_boxes(desc, r, pts)
    elif isinstance(desc, PeriodicMask):
        field = _dist_periodic_mask(desc, r, step)
        idx = np.unravel_index(np.argmax(field), field.shape)
        h = desc.period[0] / desc.values.shape[0]
        return float(field[idx]), tuple(float(i * h) for i in idx)
    else:
        raise GeometryError(f"unsupported descriptor {type(desc).__name__}")
    k = int(np.argmax(dist))
    return float(dist[k]), tuple(float(c) for c in pts[k])


def check_thickness(desc, delta: float, r: float, sampling_step: float = 1e-2) -> ThicknessVerdict:
    """Certify or refute (delta, r)-thickness.

    Full space is thick for any parameters.  A half space is never thick:
    the verdict carries a witness 10*delta deep in the complement, whose
    distance to the admissible region is exactly 10*delta + r.  Periodic
    variants reduce to one sampled fundamental cell.
    """
    if delta <= 0 or r <= 0:
        raise DataError("delta and r must be > 0")
    if isinstance(desc, FullSpace):
        return ThicknessVerdict(True, delta, r, sampling_step, 0.0, None)
    if isinstance(desc, HalfSpace):
        normal = np.asarray(desc.normal)
        unit = normal / np.linalg.norm(normal)
        boundary_pt = desc.offset / np.linalg.norm(normal) * unit
        witness = boundary_pt - 10.0 * delta * unit
        distance = 10.0 * delta + r
        return ThicknessVerdict(
            False, delta, r, sampling_step, distance, tuple(float(c) for c in witness)
        )
    worst, point = _worst_point(desc, r, sampling_step)
    if worst <= delta:
        return ThicknessVerdict(True, delta, r, sampling_step, worst, None)
    return ThicknessVerdict(False, delta, r, sampling_step, worst, point)


def grid_mask(desc, grid: PhaseGrid) -> GridMask:
    """Sample the set indicator on a phase grid (clipping to the box).

    Analytic variants are evaluated pointwise; the box simply truncates
    them, which is consistent with fields that vanish near the boundary.
    The mask variant requires its cell spacing to be commensurate with
    the grid spacing, otherwise sample points fall between mask cells.
    """
    mesh = grid.mesh()
    pts = mesh.reshape(-1, grid.n_axes)
    if isinstance(desc, FullSpace):
        vals = np.ones(pts.shape[0], dtype=bool)
    elif isinstance(desc, HalfSpace):
        _check_dim(desc, grid)
        vals = pts @ np.asarray(desc.normal) > desc.offset
    elif isinstance(desc, PeriodicBalls):
        _check_dim(desc, grid)
        period = np.asarray(desc.period)
        rel = pts[:, None, :] - np.asarray(desc.centers)[None, :, :]
        rel = rel - period * np.round(rel / period)
        dist = np.linalg.norm(rel, axis=2).min(axis=1)
        vals = dist <= desc.radius
    elif isinstance(desc, UnionBoxes):
        _check_dim(desc, grid)
        vals = np.zeros(pts.shape[0], dtype=bool)
        for lo, hi in desc.boxes:
            lo = np.asarray(lo)
            hi = np.asarray(hi)
            if desc.periodic:
                period = np.asarray(desc.period)
                mid = (lo + hi) / 2.0
                rel = pts - mid
                rel = rel - period * np.round(rel / period)
                inside = np.all((rel >= lo - mid) & (rel <= hi - mid), axis=1)
            else:
                inside = np.all((pts >= lo) & (pts <= hi), axis=1)
            vals |= inside
    elif isinstance(desc, PeriodicMask):
        _check_dim(desc, grid)
        h = desc.period[0] / desc.values.shape[0]
        ratio = grid.spacing / h
        if abs(ratio - round(ratio)) > 1e-9 and abs(1 / ratio - round(1 / ratio)) > 1e-9:
            raise GeometryError(
                f"mask cell spacing {h:.6g} incommensurate with grid spacing "
                f"{grid.spacing:.6g}"
            )
        idx = np.floor(
            (pts % np.asarray(desc.period)) / h + 1e-9
        ).astype(int)
        idx = np.minimum(idx, np.asarray(desc.values.shape) - 1)
        vals = desc.values[tuple(idx.T)]
    else:
        raise GeometryError(f"unsupported descriptor {type(desc).__name__}")
    return GridMask(grid, vals.reshape(grid.shape))


def _check_dim(desc, grid: PhaseGrid):
    if desc.dim != grid.n_axes:
        raise GeometryError(
            f"descriptor dimension {desc.dim} does not match grid with {grid.n_axes} axes"
        )


def scale_descriptor(desc, s: float):
    """Dilate the set by s > 0 (thickness delta scales the same way)."""
    if s <= 0:
        raise DataError("scale factor must be > 0")
    if isinstance(desc, FullSpace):
        return desc
    if isinstance(desc, HalfSpace):
        return HalfSpace(desc.normal, s * desc.offset)
    if isinstance(desc, PeriodicBalls):
        return PeriodicBalls(
            tuple(s * p for p in desc.period),
            tuple(tuple(s * c for c in pt) for pt in desc.centers),
            s * desc.radius,
        )
    if isinstance(desc, UnionBoxes):
        return UnionBoxes(
            tuple(
                (tuple(s * a for a in lo), tuple(s * b for b in hi))
                for lo, hi in desc.boxes
            ),
            None if desc.period is None else tuple(s * p for p in desc.period),
        )
    if isinstance(desc, PeriodicMask):
        return PeriodicMask(tuple(s * p for p in desc.period), desc.values)
    raise GeometryError(f"unsupported descriptor {type(desc).__name__}")


# ---------------------------------------------------------------------------
# text serialization

_VARIANTS = {
    "full_space": FullSpace,
    "half_space": HalfSpace,
    "periodic_balls": PeriodicBalls,
    "periodic_mask": PeriodicMask,
    "union_boxes": UnionBoxes,
}


def to_text(desc) -> str:
    """Serialize a descriptor to a human-readable JSON document."""
    if isinstance(desc, FullSpace):
        body = {"variant": "full_space", "dim": desc.dim}
    elif isinstance(desc, HalfSpace):
        body = {"variant": "half_space", "normal": list(desc.normal), "offset": desc.offset}
    elif isinstance(desc, PeriodicBalls):
        body = {
            "variant": "periodic_balls",
            "period": list(desc.period),
            "centers": [list(c) for c in desc.centers],
            "radius": desc.radius,
        }
    elif isinstance(desc, PeriodicMask):
        body = {
            "variant": "periodic_mask",
            "period": list(desc.period),
            "shape": list(desc.values.shape),
            "cells": desc.values.astype(int).flatten().tolist(),
        }
    elif isinstance(desc, UnionBoxes):
        body = {
            "variant": "union_boxes",
            "boxes": [[list(lo), list(hi)] for lo, hi in desc.boxes],
            "period": None if desc.period is None else list(desc.period),
        }
    else:
        raise GeometryError(f"unsupported descriptor {type(desc).__name__}")
    return json.dumps(body, indent=2, sort_keys=True)


def from_text(text: str):
    """Inverse of :func:`to_text`."""
    try:
        body = json.loads(text)
        variant = body.pop("variant")
    except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
        raise GeometryError(f"unreadable set descriptor: {exc}")
    if variant not in _VARIANTS:
        raise GeometryError(f"unknown set variant {variant!r}")
    if variant == "full_space":
        return FullSpace(int(body["dim"]))
    if variant == "half_space":
        return HalfSpace(tuple(body["normal"]), float(body["offset"]))
    if variant == "periodic_balls":
        return PeriodicBalls(
            tuple(body["period"]),
            tuple(tuple(c) for c in body["centers"]),
            float(body["radius"]),
        )
    if variant == "periodic_mask":
        shape = tuple(int(s) for s in body["shape"])
        values = np.asarray(body["cells"], dtype=bool).reshape(shape)
        return PeriodicMask(tuple(body["period"]), values)
    boxes = tuple((tuple(lo), tuple(hi)) for lo, hi in body["boxes"])
    period = body.get("period")
    return UnionBoxes(boxes, None if period is None else tuple(period))
