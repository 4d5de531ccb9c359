"""Raster value types: depth, disparity, flow, pointmaps, confidence.

All rasters are row-major (height, width[, channels]) float64 arrays plus a
boolean validity mask. Constructors intersect the given mask with the type's
own validity rule (finite, positive where required), so a raster can never
hold a "valid" entry that violates its invariant. Arrays are copied and
frozen; instances are immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# disparities at or below this are unusable (depth = b*f/d diverges)
DISPARITY_EPSILON = 1e-3


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def _as_values(values, ndim_tail: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2 + (1 if ndim_tail else 0):
        raise ValidationError(f"{name} must be a {'(H, W, %d)' % ndim_tail if ndim_tail else '(H, W)'} array, got shape {arr.shape}")
    if ndim_tail and arr.shape[2] != ndim_tail:
        raise ValidationError(f"{name} must have {ndim_tail} channels, got {arr.shape[2]}")
    return arr


def _as_mask(valid, shape, name: str) -> np.ndarray:
    if valid is None:
        return np.ones(shape, dtype=bool)
    mask = np.array(valid, dtype=bool)
    if mask.shape != shape:
        raise ValidationError(f"{name} mask shape {mask.shape} does not match values {shape}")
    return mask


@dataclass(frozen=True)
class DepthMap:
    values: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        values = _as_values(self.values, 0, "depth")
        mask = _as_mask(self.valid, values.shape, "depth")
        mask &= np.isfinite(values) & (values > 0)
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "valid", _freeze(mask))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())


@dataclass(frozen=True)
class DisparityMap:
    values: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        values = _as_values(self.values, 0, "disparity")
        mask = _as_mask(self.valid, values.shape, "disparity")
        mask &= np.isfinite(values) & (values > DISPARITY_EPSILON)
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "valid", _freeze(mask))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())


@dataclass(frozen=True)
class FlowField:
    """Per-pixel 2-vectors. Used both for flow deltas (du, dv) and, by the
    reprojection helpers, for absolute target coordinates."""

    vectors: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        vectors = _as_values(self.vectors, 2, "flow")
        mask = _as_mask(self.valid, vectors.shape[:2], "flow")
        mask &= np.all(np.isfinite(vectors), axis=2)
        object.__setattr__(self, "vectors", _freeze(vectors))
        object.__setattr__(self, "valid", _freeze(mask))

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    @property
    def height(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class Pointmap:
    points: np.ndarray
    valid: np.ndarray = None

    def __post_init__(self):
        points = _as_values(self.points, 3, "pointmap")
        mask = _as_mask(self.valid, points.shape[:2], "pointmap")
        mask &= np.all(np.isfinite(points), axis=2)
        object.__setattr__(self, "points", _freeze(points))
        object.__setattr__(self, "valid", _freeze(mask))

    @property
    def width(self) -> int:
        return self.points.shape[1]

    @property
    def height(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class ConfidenceMap:
    values: np.ndarray

    def __post_init__(self):
        values = _as_values(self.values, 0, "confidence")
        if not np.all(np.isfinite(values) & (values > 0)):
            raise ValidationError("confidence values must all be finite and positive")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]
