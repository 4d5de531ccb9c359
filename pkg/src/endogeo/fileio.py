"""Raster file codecs: PFM (1- and 3-channel) and Middlebury .flo.

PFM layout: header ``Pf\\n<width> <height>\\n<scale>\\n`` (``PF`` for
3-channel), scale sign encodes endianness (negative = little-endian), pixel
rows are stored bottom-to-top as 32-bit floats. Depth/disparity wrappers
serialize invalid pixels as 0.0; pointmap wrappers use the all-zero vector.

.flo layout: float32 magic 202021.25, int32 width, int32 height, then
interleaved float32 (du, dv) top-to-bottom, always little-endian. Components
with magnitude >= 1e9 mark a pixel invalid (the Middlebury "unknown flow"
sentinel); invalid pixels are written as 1e10.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError
from .rasters import DepthMap, DisparityMap, FlowField, Pointmap

_FLO_MAGIC = 202021.25
_FLO_INVALID_READ = 1e9
_FLO_INVALID_WRITE = 1e10


def write_pfm(path, array, *, scale: float = -1.0) -> None:
    """Write a (H, W) or (H, W, 3) float array. Negative scale selects
    little-endian storage, positive big-endian; the magnitude is stored as-is."""
    data = np.asarray(array, dtype=np.float32)
    if data.ndim == 2:
        magic = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        magic = b"PF"
    else:
        raise FormatError(
            f"PFM supports (H, W) or (H, W, 3) arrays, got shape {data.shape}", path=path
        )
    if scale == 0:
        raise FormatError("PFM scale must be nonzero", path=path)
    dtype = "<f4" if scale < 0 else ">f4"
    height, width = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(f"{width} {height}\n".encode("ascii"))
        fh.write(f"{float(scale)}\n".encode("ascii"))
        fh.write(np.flipud(data).astype(dtype).tobytes())


def read_pfm(path):
    """Returns (float32 array of shape (H, W) or (H, W, 3), scale magnitude)."""
    with open(path, "rb") as fh:
        magic = fh.readline().rstrip()
        if magic == b"Pf":
            channels = 1
        elif magic == b"PF":
            channels = 3
        else:
            raise FormatError(f"not a PFM file (magic {magic!r})", path=path)
        dims = fh.readline().split()
        if len(dims) != 2:
            raise FormatError("malformed PFM dimensions line", path=path)
        try:
            width, height = int(dims[0]), int(dims[1])
        except ValueError:
            raise FormatError(f"non-integer PFM dimensions {dims}", path=path) from None
        if width <= 0 or height <= 0:
            raise FormatError(f"non-positive PFM dimensions {width}x{height}", path=path)
        try:
            scale = float(fh.readline())
        except ValueError:
            raise FormatError("malformed PFM scale line", path=path) from None
        if scale == 0:
            raise FormatError("PFM scale must be nonzero", path=path)
        dtype = "<f4" if scale < 0 else ">f4"
        count = width * height * channels
        raw = fh.read(count * 4)
        if len(raw) != count * 4:
            raise FormatError(
                f"truncated PFM payload: expected {count * 4} bytes, got {len(raw)}",
                path=path,
            )
    data = np.frombuffer(raw, dtype=dtype).reshape(
        (height, width) if channels == 1 else (height, width, 3)
    )
    return np.flipud(data).astype(np.float32), abs(scale)


def write_depth_pfm(path, depth: DepthMap) -> None:
    write_pfm(path, np.where(depth.valid, depth.values, 0.0))


def read_depth_pfm(path) -> DepthMap:
    data, _ = read_pfm(path)
    if data.ndim != 2:
        raise FormatError("depth PFM must be single-channel", path=path)
    values = data.astype(np.float64)
    return DepthMap(values, values > 0)


def write_disparity_pfm(path, disparity: DisparityMap) -> None:
    write_pfm(path, np.where(disparity.valid, disparity.values, 0.0))


def read_disparity_pfm(path) -> DisparityMap:
    data, _ = read_pfm(path)
    if data.ndim != 2:
        raise FormatError("disparity PFM must be single-channel", path=path)
    values = data.astype(np.float64)
    return DisparityMap(values, values > 0)


def write_pointmap_pfm(path, pointmap: Pointmap) -> None:
    write_pfm(path, np.where(pointmap.valid[..., None], pointmap.points, 0.0))


def read_pointmap_pfm(path) -> Pointmap:
    data, _ = read_pfm(path)
    if data.ndim != 3:
        raise FormatError("pointmap PFM must be 3-channel", path=path)
    points = data.astype(np.float64)
    return Pointmap(points, np.any(points != 0.0, axis=2))


def write_flo(path, flow: FlowField) -> None:
    height, width = flow.vectors.shape[:2]
    data = np.where(flow.valid[..., None], flow.vectors, _FLO_INVALID_WRITE)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<f", _FLO_MAGIC))
        fh.write(struct.pack("<ii", width, height))
        fh.write(data.astype("<f4").tobytes())


def read_flo(path) -> FlowField:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) != 12:
            raise FormatError("truncated .flo header", path=path)
        magic, width, height = struct.unpack("<fii", head)
        if magic != _FLO_MAGIC:
            raise FormatError(f"not a .flo file (magic {magic!r})", path=path)
        if width <= 0 or height <= 0:
            raise FormatError(f"non-positive .flo dimensions {width}x{height}", path=path)
        count = width * height * 2
        raw = fh.read(count * 4)
        if len(raw) != count * 4:
            raise FormatError(
                f"truncated .flo payload: expected {count * 4} bytes, got {len(raw)}",
                path=path,
            )
    vectors = np.frombuffer(raw, dtype="<f4").reshape(height, width, 2).astype(np.float64)
    valid = np.all(np.abs(vectors) < _FLO_INVALID_READ, axis=2)
    return FlowField(vectors, valid)
