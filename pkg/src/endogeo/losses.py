"""Evaluators for the hybrid supervision objective.

Supervised terms (confidence-weighted pointmap loss, pose loss) reduce by
SUM over their elements; the self-supervised consistency terms (flow,
temporal, prior) reduce by MEAN over valid pixels so values are comparable
across validity counts. All functions are pure evaluators over immutable
rasters; none of this is differentiable machinery.

Loss functions that reduce over pixels return ``(value, raster, mask)``:
the per-pixel contribution raster (zero outside the mask) and the mask of
pixels that entered the reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import CameraIntrinsics, Pose
from .rasters import ConfidenceMap, DepthMap, FlowField, Pointmap


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.2               # confidence regularizer weight
    lambda_consist: float = 0.1      # weight of the consistency composite in the total
    w_flow: float = 1.0
    w_temp: float = 1.0
    w_prior: float = 1.0
    w_si: float = 1.0
    w_grad: float = 1.0
    w_normal: float = 1.0
    uncertainty_constant: float = 1.0  # scalar stand-in for per-pixel uncertainty maps

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        for name in (
            "lambda_consist",
            "w_flow",
            "w_temp",
            "w_prior",
            "w_si",
            "w_grad",
            "w_normal",
            "uncertainty_constant",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class NormalizationSpec:
    s_hat: float  # scale of the predicted set
    s: float      # scale of the reference set

    def __post_init__(self):
        if not (self.s_hat > 0 and self.s > 0):
            raise ValidationError(
                f"normalization scales must be positive: s_hat={self.s_hat} s={self.s}"
            )


def point_set_scale(pointmap: Pointmap) -> float:
    """Mean Euclidean norm of the valid points."""
    if not pointmap.valid.any():
        raise ValidationError("pointmap has no valid points")
    norms = np.sqrt((pointmap.points**2).sum(axis=2))
    return float(norms[pointmap.valid].mean())


def _require_same_shape(a, b, what: str):
    if (a.height, a.width) != (b.height, b.width):
        raise ValidationError(
            f"{what} dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def conf_loss(pred: Pointmap, ref: Pointmap, conf: ConfidenceMap, cfg: LossConfig):
    """Sum over jointly valid pixels of c * ||x/s_hat - y/s||_2 - alpha * log c.

    s_hat and s are the per-map point-set scales, so a uniform scaling of
    either map cancels out.
    """
    _require_same_shape(pred, ref, "pointmap")
    _require_same_shape(pred, conf, "confidence")
    mask = pred.valid & ref.valid
    if not mask.any():
        raise ValidationError("no jointly valid pixels")
    s_hat = point_set_scale(pred)
    s = point_set_scale(ref)
    diff = pred.points / s_hat - ref.points / s
    residual = np.sqrt((diff**2).sum(axis=2))
    per_pixel = conf.values * residual - cfg.alpha * np.log(conf.values)
    raster = np.where(mask, per_pixel, 0.0)
    return float(raster[mask].sum()), raster, mask


def pose_loss(pred, ref, norms: NormalizationSpec) -> float:
    """Sum over frames of ||q_hat - q||_2 + ||t_hat/s_hat - t/s||_2, with the
    quaternion sign chosen per frame to minimize the first term."""
    pred = list(pred)
    ref = list(ref)
    if len(pred) != len(ref):
        raise ValidationError(f"pose list lengths differ: {len(pred)} vs {len(ref)}")
    if not pred:
        raise ValidationError("pose lists are empty")
    total = 0.0
    for p, r in zip(pred, ref):
        qp = np.array([p.rotation.w, p.rotation.x, p.rotation.y, p.rotation.z])
        qr = np.array([r.rotation.w, r.rotation.x, r.rotation.y, r.rotation.z])
        q_term = min(
            float(np.sqrt(((qp - qr) ** 2).sum())), float(np.sqrt(((qp + qr) ** 2).sum()))
        )
        t_diff = p.translation / norms.s_hat - r.translation / norms.s
        total += q_term + float(np.sqrt((t_diff**2).sum()))
    return total


def _pixel_grid(width: int, height: int):
    return np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )


def _unproject_values(depth_values: np.ndarray, intrinsics: CameraIntrinsics):
    height, width = depth_values.shape
    uu, vv = _pixel_grid(width, height)
    x = (uu - intrinsics.cx) / intrinsics.fx * depth_values
    y = (vv - intrinsics.cy) / intrinsics.fy * depth_values
    return np.stack([x, y, depth_values], axis=-1)


def _bilinear_masked(values: np.ndarray, valid: np.ndarray, x: np.ndarray, y: np.ndarray):
    """Bilinear sample with the strict validity rule: the location must lie in
    [0, W-1] x [0, H-1] and all four surrounding cells must be valid."""
    height, width = values.shape
    ok = (x >= 0) & (x <= width - 1) & (y >= 0) & (y <= height - 1)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, max(width - 2, 0))
    y0 = np.clip(np.floor(y).astype(np.int64), 0, max(height - 2, 0))
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    a = np.where(ok, x - x0, 0.0)
    b = np.where(ok, y - y0, 0.0)
    ok = ok & valid[y0, x0] & valid[y0, x1] & valid[y1, x0] & valid[y1, x1]
    w00 = (1.0 - a) * (1.0 - b)
    w10 = a * (1.0 - b)
    w01 = (1.0 - a) * b
    w11 = a * b
    sample = (
        w00 * values[y0, x0]
        + w10 * values[y0, x1]
        + w01 * values[y1, x0]
        + w11 * values[y1, x1]
    )
    return np.where(ok, sample, 0.0), ok


def induced_reprojection(
    depth: DepthMap,
    k_from: CameraIntrinsics,
    k_to: CameraIntrinsics,
    motion: Pose,
) -> FlowField:
    """Per-pixel target coordinates u(p) = project(motion(unproject(p, D(p)))).

    ``motion`` maps source-camera coordinates to target-camera coordinates.
    Returns absolute target coordinates (not deltas); pixels whose transformed
    z is non-positive, or whose depth is invalid, are masked out.
    """
    points = _unproject_values(depth.values, k_from)
    moved = motion.transform(points.reshape(-1, 3)).reshape(points.shape)
    z = moved[..., 2]
    mask = depth.valid & (z > 0)
    z_safe = np.where(mask, z, 1.0)
    u = k_to.fx * moved[..., 0] / z_safe + k_to.cx
    v = k_to.fy * moved[..., 1] / z_safe + k_to.cy
    targets = np.stack([np.where(mask, u, 0.0), np.where(mask, v, 0.0)], axis=-1)
    return FlowField(targets, mask)


def c_flow(
    depth: DepthMap,
    k_from: CameraIntrinsics,
    k_to: CameraIntrinsics,
    motion: Pose,
    flow: FlowField,
):
    """Mean L1 distance between the depth/pose-induced reprojection and the
    flow target p' = p + flow; out-of-bounds targets are excluded."""
    _require_same_shape(depth, flow, "flow")
    induced = induced_reprojection(depth, k_from, k_to, motion)
    uu, vv = _pixel_grid(depth.width, depth.height)
    px = uu + flow.vectors[..., 0]
    py = vv + flow.vectors[..., 1]
    in_bounds = (px >= 0) & (px <= depth.width - 1) & (py >= 0) & (py <= depth.height - 1)
    mask = induced.valid & flow.valid & in_bounds
    if not mask.any():
        raise ValidationError("no valid pixels for the flow-consistency loss")
    l1 = np.abs(induced.vectors[..., 0] - px) + np.abs(induced.vectors[..., 1] - py)
    raster = np.where(mask, l1, 0.0)
    return float(raster[mask].mean()), raster, mask


def c_temp(
    depth_i: DepthMap,
    depth_j: DepthMap,
    k_i: CameraIntrinsics,
    k_j: CameraIntrinsics,
    motion: Pose,
    flow: FlowField,
):
    """Mean of |max(P_z / D_j(p'), D_j(p') / P_z) - 1| over usable pixels.

    P_z is the z of the unprojected source pixel moved into the target frame;
    D_j is sampled bilinearly at p' = p + flow and the sample is rejected if
    any of the four neighbors is invalid or the location is out of bounds.
    """
    _require_same_shape(depth_i, flow, "flow")
    points = _unproject_values(depth_i.values, k_i)
    moved = motion.transform(points.reshape(-1, 3)).reshape(points.shape)
    p_z = moved[..., 2]
    uu, vv = _pixel_grid(depth_i.width, depth_i.height)
    px = uu + flow.vectors[..., 0]
    py = vv + flow.vectors[..., 1]
    sample, ok = _bilinear_masked(depth_j.values, depth_j.valid, px, py)
    mask = depth_i.valid & flow.valid & (p_z > 0) & ok & (sample > 0)
    if not mask.any():
        raise ValidationError("no valid pixels for the temporal-consistency loss")
    pz_safe = np.where(mask, p_z, 1.0)
    s_safe = np.where(mask, sample, 1.0)
    ratio = np.maximum(pz_safe / s_safe, s_safe / pz_safe)
    raster = np.where(mask, np.abs(ratio - 1.0), 0.0)
    return float(raster[mask].mean()), raster, mask


def _pool2x2(grid: np.ndarray, valid: np.ndarray):
    height, width = grid.shape
    out_h, out_w = height // 2, width // 2
    g = np.where(valid, grid, 0.0)[: 2 * out_h, : 2 * out_w]
    v = valid[: 2 * out_h, : 2 * out_w]
    sums = (
        g[0::2, 0::2] + g[0::2, 1::2] + g[1::2, 0::2] + g[1::2, 1::2]
    )
    counts = (
        v[0::2, 0::2].astype(np.float64)
        + v[0::2, 1::2]
        + v[1::2, 0::2]
        + v[1::2, 1::2]
    )
    pooled_valid = counts > 0
    pooled = np.where(pooled_valid, sums / np.where(pooled_valid, counts, 1.0), 0.0)
    return pooled, pooled_valid


def _grad_term(grid: np.ndarray, valid: np.ndarray) -> float:
    height, width = grid.shape
    if height < 2 or width < 2:
        return 0.0
    ok = valid[:-1, :-1] & valid[:-1, 1:] & valid[1:, :-1]
    if not ok.any():
        return 0.0
    gx = np.abs(grid[:-1, 1:] - grid[:-1, :-1])
    gy = np.abs(grid[1:, :-1] - grid[:-1, :-1])
    return float((gx + gy)[ok].mean())


def _normals(depth_values: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Unnormalized surface normals at interior pixels via central differences
    of unprojected points; output shape (H-2, W-2, 3)."""
    points = _unproject_values(depth_values, intrinsics)
    tx = points[1:-1, 2:] - points[1:-1, :-2]
    ty = points[2:, 1:-1] - points[:-2, 1:-1]
    return np.cross(tx, ty)


def c_prior(depth: DepthMap, ref: DepthMap, intrinsics: CameraIntrinsics, cfg: LossConfig):
    """Depth-prior composite against a reference depth map.

    Returns (total, breakdown) with breakdown keys c_si, c_grad, c_normal:
    - c_si: variance of the log-depth residual (scale invariant),
    - c_grad: multi-scale (4 dyadic levels) mean |forward-diff| of the
      log residual,
    - c_normal: mean (1 - cos angle) between surface normals of the two maps
      (needs intrinsics to unproject).
    Total = w_si * c_si + w_grad * c_grad + w_normal * c_normal.
    """
    _require_same_shape(depth, ref, "depth")
    mask = depth.valid & ref.valid
    if not mask.any():
        raise ValidationError("no jointly valid pixels for the prior loss")
    safe_d = np.where(mask, depth.values, 1.0)
    safe_r = np.where(mask, ref.values, 1.0)
    g = np.where(mask, np.log(safe_d) - np.log(safe_r), 0.0)
    gv = g[mask]
    c_si = float((gv**2).mean() - gv.mean() ** 2)

    c_grad = 0.0
    grid, valid = g, mask
    for scale in range(4):
        if scale > 0:
            if grid.shape[0] < 2 or grid.shape[1] < 2:
                break
            grid, valid = _pool2x2(grid, valid)
        c_grad += _grad_term(grid, valid)

    height, width = depth.values.shape
    c_normal = 0.0
    if height >= 3 and width >= 3:
        cross5 = (
            mask[1:-1, 1:-1]
            & mask[1:-1, 2:]
            & mask[1:-1, :-2]
            & mask[2:, 1:-1]
            & mask[:-2, 1:-1]
        )
        n_d = _normals(depth.values, intrinsics)
        n_r = _normals(ref.values, intrinsics)
        norm_d = np.sqrt((n_d**2).sum(axis=2))
        norm_r = np.sqrt((n_r**2).sum(axis=2))
        usable = cross5 & (norm_d > 0) & (norm_r > 0)
        if usable.any():
            # 1 - cos(angle) computed as 0.5 * ||u_d - u_r||^2 on the unit
            # normals: algebraically identical, but exactly 0 for identical
            # maps and never negative under rounding.
            u_d = n_d / np.where(usable, norm_d, 1.0)[..., None]
            u_r = n_r / np.where(usable, norm_r, 1.0)[..., None]
            half_sq = 0.5 * ((u_d - u_r) ** 2).sum(axis=2)
            c_normal = float(half_sq[usable].mean())

    total = cfg.w_si * c_si + cfg.w_grad * c_grad + cfg.w_normal * c_normal
    return total, {"c_si": c_si, "c_grad": c_grad, "c_normal": c_normal}


def consistency_total(flow_term: float, temp_term: float, prior_term: float, cfg: LossConfig):
    """Weighted composite of the three consistency terms. The scalar
    uncertainty constant multiplies the flow and temporal terms (the terms
    that carried per-pixel uncertainty in the method this evaluator mirrors)."""
    weighted = {
        "flow": cfg.uncertainty_constant * cfg.w_flow * flow_term,
        "temp": cfg.uncertainty_constant * cfg.w_temp * temp_term,
        "prior": cfg.w_prior * prior_term,
    }
    return weighted["flow"] + weighted["temp"] + weighted["prior"], weighted


def total_loss(conf_value: float, pose_value: float, consistency_value: float, cfg: LossConfig) -> float:
    """(supervised conf + pose) + lambda_consist * consistency."""
    return (conf_value + pose_value) + cfg.lambda_consist * consistency_value
