"""Stereo calibration geometry: distortion, Bouguet-style rectification map
generation, bilinear remapping, and metric depth from disparity.

Extrinsics convention: (rotation, translation) place the right camera in the
left camera frame, i.e. X_left = R * X_right + T. For an ideal horizontal rig
T = (baseline, 0, 0), which makes disparity = f * baseline / z positive.

Distortion model: 5-coefficient radial-tangential (k1, k2, p1, p2, k3) on
normalized coordinates; the inverse runs at most 20 fixed-point iterations to
a 1e-8 px step tolerance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ValidationError
from .geometry import CameraIntrinsics, Quaternion, slerp
from .rasters import DISPARITY_EPSILON, DepthMap, DisparityMap

_UNDISTORT_MAX_ITER = 20
_UNDISTORT_TOL_PX = 1e-8


@dataclass(frozen=True)
class MonoCalibration:
    intrinsics: CameraIntrinsics
    dist: tuple  # (k1, k2, p1, p2, k3)

    def __post_init__(self):
        d = tuple(float(v) for v in self.dist)
        if len(d) != 5:
            raise ValidationError(f"expected 5 distortion coefficients, got {len(d)}")
        if not all(math.isfinite(v) for v in d):
            raise ValidationError("distortion coefficients must be finite")
        object.__setattr__(self, "dist", d)


@dataclass(frozen=True)
class StereoCalibration:
    left: MonoCalibration
    right: MonoCalibration
    rotation: Quaternion  # right camera orientation in the left frame
    translation: np.ndarray  # right camera position in the left frame, mm

    def __post_init__(self):
        rot = self.rotation
        if not isinstance(rot, Quaternion):
            object.__setattr__(
                self, "rotation", Quaternion.from_rotation_matrix(np.asarray(rot, dtype=np.float64))
            )
        t = np.array(self.translation, dtype=np.float64)
        if t.shape != (3,):
            raise ValidationError(f"extrinsic translation must be a 3-vector, got {t.shape}")
        if float(np.linalg.norm(t)) <= 0:
            raise ValidationError("degenerate rig: zero baseline")
        t.flags.writeable = False
        object.__setattr__(self, "translation", t)

    @property
    def baseline(self) -> float:
        return float(np.linalg.norm(self.translation))


@dataclass(frozen=True)
class RectifyMaps:
    """Dest-to-source lookup rasters (feed to :func:`remap`) plus the shared
    rectified intrinsics and the rectifying rotations for forward mapping."""

    left_x: np.ndarray
    left_y: np.ndarray
    right_x: np.ndarray
    right_y: np.ndarray
    intrinsics: CameraIntrinsics
    rotation_left: Quaternion  # rectified axes expressed in the left camera frame
    rotation_right: Quaternion  # rectified axes expressed in the right camera frame
    baseline: float


def distort_normalized(xn, yn, dist):
    """Forward 5-coefficient model on normalized image coordinates."""
    k1, k2, p1, p2, k3 = dist
    x = np.asarray(xn, dtype=np.float64)
    y = np.asarray(yn, dtype=np.float64)
    r2 = x * x + y * y
    radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
    xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
    yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
    return xd, yd


def undistort_normalized(xd, yd, dist, fx: float, fy: float):
    """Invert :func:`distort_normalized` by fixed-point iteration.

    fx/fy convert the step size to pixels for the stopping test.
    """
    xd = np.asarray(xd, dtype=np.float64)
    yd = np.asarray(yd, dtype=np.float64)
    k1, k2, p1, p2, k3 = dist
    x = xd.copy()
    y = yd.copy()
    for _ in range(_UNDISTORT_MAX_ITER):
        r2 = x * x + y * y
        radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
        dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
        dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
        x_new = (xd - dx) / radial
        y_new = (yd - dy) / radial
        step = np.maximum(np.abs(x_new - x) * fx, np.abs(y_new - y) * fy)
        x, y = x_new, y_new
        if float(step.max()) < _UNDISTORT_TOL_PX:
            break
    return x, y


def undistort_pixels(cam: MonoCalibration, pixels):
    """Distorted pixel coordinates -> undistorted normalized coordinates (..., 2)."""
    px = np.asarray(pixels, dtype=np.float64)
    k = cam.intrinsics
    xd = (px[..., 0] - k.cx) / k.fx
    yd = (px[..., 1] - k.cy) / k.fy
    x, y = undistort_normalized(xd, yd, cam.dist, k.fx, k.fy)
    return np.stack([x, y], axis=-1)


def distort_pixels(cam: MonoCalibration, normalized):
    """Undistorted normalized coordinates -> distorted pixel coordinates (..., 2)."""
    n = np.asarray(normalized, dtype=np.float64)
    xd, yd = distort_normalized(n[..., 0], n[..., 1], cam.dist)
    k = cam.intrinsics
    return np.stack([k.fx * xd + k.cx, k.fy * yd + k.cy], axis=-1)


def _rectifying_rotation(calib: StereoCalibration) -> np.ndarray:
    """Common rectified orientation, expressed in the left camera frame.

    Columns: e1 along the baseline, e3 near the average optical axis."""
    e1 = calib.translation / calib.baseline
    half = slerp(Quaternion.identity(), calib.rotation, 0.5)
    z_avg = half.rotate(np.array([0.0, 0.0, 1.0]))
    e2 = np.cross(z_avg, e1)
    n2 = float(np.linalg.norm(e2))
    if n2 <= 1e-12:
        raise ValidationError("degenerate rig: baseline parallel to the optical axis")
    e2 = e2 / n2
    e3 = np.cross(e1, e2)
    return np.column_stack([e1, e2, e3])


def compute_rectify_maps(calib: StereoCalibration) -> RectifyMaps:
    """Bouguet rectification: both virtual cameras share one orientation with
    x along the baseline; rectified intrinsics are the left camera's."""
    r_rect = _rectifying_rotation(calib)
    r_rel = calib.rotation.to_rotation_matrix()
    k = calib.left.intrinsics
    rect_k = CameraIntrinsics(k.fx, k.fy, k.cx, k.cy, k.width, k.height)

    def maps_for(cam: MonoCalibration, basis: np.ndarray):
        kk = rect_k
        uu, vv = np.meshgrid(
            np.arange(kk.width, dtype=np.float64), np.arange(kk.height, dtype=np.float64)
        )
        dirs = np.stack(
            [(uu - kk.cx) / kk.fx, (vv - kk.cy) / kk.fy, np.ones_like(uu)], axis=-1
        )
        cam_dirs = dirs @ basis.T
        z = cam_dirs[..., 2]
        ok = z > 0
        z_safe = np.where(ok, z, 1.0)
        xn = cam_dirs[..., 0] / z_safe
        yn = cam_dirs[..., 1] / z_safe
        xd, yd = distort_normalized(xn, yn, cam.dist)
        ki = cam.intrinsics
        map_x = np.where(ok, ki.fx * xd + ki.cx, -1e9)
        map_y = np.where(ok, ki.fy * yd + ki.cy, -1e9)
        return map_x, map_y

    left_x, left_y = maps_for(calib.left, r_rect)
    basis_right = r_rel.T @ r_rect
    right_x, right_y = maps_for(calib.right, basis_right)
    return RectifyMaps(
        left_x,
        left_y,
        right_x,
        right_y,
        rect_k,
        Quaternion.from_rotation_matrix(r_rect),
        Quaternion.from_rotation_matrix(basis_right),
        calib.baseline,
    )


def rectify_pixels(calib: StereoCalibration, maps: RectifyMaps, side: str, pixels):
    """Forward mapping: observed (distorted) pixels -> rectified pixel coordinates."""
    if side == "left":
        cam, rot = calib.left, maps.rotation_left
    elif side == "right":
        cam, rot = calib.right, maps.rotation_right
    else:
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    norm = undistort_pixels(cam, pixels)
    dirs = np.concatenate([norm, np.ones(norm.shape[:-1] + (1,))], axis=-1)
    rect_dirs = dirs @ rot.to_rotation_matrix()
    z = rect_dirs[..., 2]
    if np.any(z <= 0):
        raise ValidationError("point behind the rectified camera")
    k = maps.intrinsics
    return np.stack(
        [
            k.fx * rect_dirs[..., 0] / z + k.cx,
            k.fy * rect_dirs[..., 1] / z + k.cy,
        ],
        axis=-1,
    )


def remap(image, map_x, map_y, *, fill: float = 0.0):
    """Bilinearly sample ``image`` at (map_x, map_y); out-of-bounds -> fill.

    Accepts (H, W) or (H, W, C) images; maps may have any common 2D shape.
    """
    img = np.asarray(image, dtype=np.float64)
    mx = np.asarray(map_x, dtype=np.float64)
    my = np.asarray(map_y, dtype=np.float64)
    if mx.shape != my.shape:
        raise ValidationError(f"map shapes differ: {mx.shape} vs {my.shape}")
    if img.ndim not in (2, 3):
        raise ValidationError(f"image must be (H, W) or (H, W, C), got {img.shape}")
    height, width = img.shape[:2]
    ok = (mx >= 0) & (mx <= width - 1) & (my >= 0) & (my <= height - 1)
    x0 = np.clip(np.floor(mx).astype(np.int64), 0, max(width - 2, 0))
    y0 = np.clip(np.floor(my).astype(np.int64), 0, max(height - 2, 0))
    a = np.where(ok, mx - x0, 0.0)
    b = np.where(ok, my - y0, 0.0)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    w00 = (1.0 - a) * (1.0 - b)
    w10 = a * (1.0 - b)
    w01 = (1.0 - a) * b
    w11 = a * b
    if img.ndim == 3:
        w00, w10, w01, w11 = (w[..., None] for w in (w00, w10, w01, w11))
        ok_b = ok[..., None]
    else:
        ok_b = ok
    out = (
        w00 * img[y0, x0] + w10 * img[y0, x1] + w01 * img[y1, x0] + w11 * img[y1, x1]
    )
    return np.where(ok_b, out, fill)


def disparity_to_depth(disparity: DisparityMap, baseline: float, focal: float) -> DepthMap:
    """Depth = baseline * focal / disparity on valid pixels; invalid pixels
    (including d <= DISPARITY_EPSILON, already masked by DisparityMap) stay
    invalid and serialize as 0."""
    if not baseline > 0:
        raise ValidationError(f"baseline must be positive, got {baseline}")
    if not focal > 0:
        raise ValidationError(f"focal length must be positive, got {focal}")
    bf = baseline * focal
    safe = np.where(disparity.valid, disparity.values, 1.0)
    values = np.where(disparity.valid, bf / safe, 0.0)
    return DepthMap(values, disparity.valid)


def depth_to_disparity(depth: DepthMap, baseline: float, focal: float) -> DisparityMap:
    if not baseline > 0:
        raise ValidationError(f"baseline must be positive, got {baseline}")
    if not focal > 0:
        raise ValidationError(f"focal length must be positive, got {focal}")
    bf = baseline * focal
    safe = np.where(depth.valid, depth.values, 1.0)
    values = np.where(depth.valid, bf / safe, 0.0)
    return DisparityMap(values, depth.valid)


def _camera_from_dict(obj: dict, path, side: str) -> MonoCalibration:
    required = {"fx", "fy", "cx", "cy", "width", "height", "dist"}
    missing = required - obj.keys()
    if missing:
        raise FormatError(f"calibration {side} camera missing keys {sorted(missing)}", path=path)
    dist = obj["dist"]
    if not isinstance(dist, list) or len(dist) != 5:
        raise FormatError(
            f"calibration {side} camera dist must be a 5-element list [k1, k2, p1, p2, k3]",
            path=path,
        )
    try:
        intr = CameraIntrinsics(
            float(obj["fx"]),
            float(obj["fy"]),
            float(obj["cx"]),
            float(obj["cy"]),
            int(obj["width"]),
            int(obj["height"]),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(f"calibration {side} camera: {exc}", path=path) from None
    return MonoCalibration(intr, tuple(float(v) for v in dist))


def load_calibration(path) -> StereoCalibration:
    """JSON schema: {"left": {fx, fy, cx, cy, width, height, dist},
    "right": {...}, "extrinsics": {"R": 3x3 row-major, "T": [tx, ty, tz]}}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}", path=path, line=exc.lineno) from None
    for key in ("left", "right", "extrinsics"):
        if key not in obj:
            raise FormatError(f"calibration missing key {key!r}", path=path)
    ext = obj["extrinsics"]
    if "R" not in ext or "T" not in ext:
        raise FormatError("calibration extrinsics must contain 'R' and 'T'", path=path)
    r = np.array(ext["R"], dtype=np.float64)
    if r.shape != (3, 3):
        raise FormatError(f"extrinsics R must be 3x3, got shape {r.shape}", path=path)
    t = np.array(ext["T"], dtype=np.float64)
    if t.shape != (3,):
        raise FormatError(f"extrinsics T must be a 3-vector, got shape {t.shape}", path=path)
    ortho = float(np.abs(r @ r.T - np.eye(3)).max())
    if ortho > 1e-6:
        raise FormatError(f"extrinsics R is not a rotation (orthogonality error {ortho:.3g})", path=path)
    return StereoCalibration(
        _camera_from_dict(obj["left"], path, "left"),
        _camera_from_dict(obj["right"], path, "right"),
        Quaternion.from_rotation_matrix(r),
        t,
    )


def calibration_to_dict(calib: StereoCalibration) -> dict:
    def cam(mono: MonoCalibration) -> dict:
        k = mono.intrinsics
        return {
            "fx": k.fx,
            "fy": k.fy,
            "cx": k.cx,
            "cy": k.cy,
            "width": k.width,
            "height": k.height,
            "dist": list(mono.dist),
        }

    return {
        "left": cam(calib.left),
        "right": cam(calib.right),
        "extrinsics": {
            "R": calib.rotation.to_rotation_matrix().tolist(),
            "T": calib.translation.tolist(),
        },
    }


def save_calibration(path, calib: StereoCalibration) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(calibration_to_dict(calib), fh, indent=2, sort_keys=True)
        fh.write("\n")
