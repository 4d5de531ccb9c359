"""Evaluation protocol: ATE, windowed RTE, and the five standard depth metrics.

ATE aligns predicted positions to ground truth (similarity by default, to
absorb monocular scale; rigid available) and reports the position RMSE in mm.
RTE compares relative poses over a fixed frame window (default 16) and
reports the RMSE of the translational error norm; the rotational component is
available as a secondary diagnostic. Depth evaluation runs at a fixed
resolution (default 256x192) with optional per-map median scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import compose, inverse, umeyama_align
from .rasters import DepthMap
from .trajectory import Trajectory

RTE_DEFAULT_WINDOW = 16


@dataclass(frozen=True)
class DepthEvalConfig:
    eval_width: int = 256
    eval_height: int = 192
    depth_min: float = 0.1
    depth_max: float = 150.0
    median_scaling: bool = True

    def __post_init__(self):
        if self.eval_width <= 0 or self.eval_height <= 0:
            raise ValidationError(
                f"eval resolution must be positive, got {self.eval_width}x{self.eval_height}"
            )
        if not (0 < self.depth_min < self.depth_max):
            raise ValidationError(
                f"need 0 < depth_min < depth_max, got [{self.depth_min}, {self.depth_max}]"
            )


@dataclass(frozen=True)
class DepthMetrics:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    delta_1_25: float
    n_pixels: int

    def to_dict(self) -> dict:
        return {
            "abs_rel": self.abs_rel,
            "sq_rel": self.sq_rel,
            "rmse": self.rmse,
            "rmse_log": self.rmse_log,
            "delta_1_25": self.delta_1_25,
            "n_pixels": self.n_pixels,
        }


def _common_positions(pred: Trajectory, gt: Trajectory):
    if pred.frames != gt.frames:
        raise ValidationError(
            "trajectories cover different frame sets "
            f"({len(pred)} vs {len(gt)} entries)"
        )
    return pred, gt


def ate(pred: Trajectory, gt: Trajectory, align: str = "sim3") -> float:
    """Position RMSE (mm) after global alignment of pred onto gt."""
    if align not in ("sim3", "se3"):
        raise ValidationError(f"align must be 'sim3' or 'se3', got {align!r}")
    pred, gt = _common_positions(pred, gt)
    if len(pred) < 2:
        raise ValidationError(f"ATE needs at least 2 common frames, got {len(pred)}")
    p = pred.positions()
    g = gt.positions()
    transform = umeyama_align(p, g, with_scale=(align == "sim3"))
    residual = transform.apply(p) - g
    return float(np.sqrt((residual**2).sum(axis=1).mean()))


def rte(pred: Trajectory, gt: Trajectory, window: int = RTE_DEFAULT_WINDOW) -> float:
    """RMSE (mm) of the translational relative-pose error over the window."""
    return rpe(pred, gt, window)[0]


def rpe(pred: Trajectory, gt: Trajectory, window: int = RTE_DEFAULT_WINDOW) -> tuple:
    """(translation RMSE mm, rotation RMSE rad) of windowed relative-pose errors.

    For each entry pair (i, i+window): E = inverse(rel_gt) o rel_pred with
    rel = inverse(pose_i) o pose_{i+window}.
    """
    if window <= 0:
        raise ValidationError(f"window must be positive, got {window}")
    pred, gt = _common_positions(pred, gt)
    n = len(pred)
    if n <= window:
        raise ValidationError(
            f"trajectory too short for window {window}: {n} entries"
        )
    trans_sq = []
    rot_sq = []
    pred_poses = pred.poses
    gt_poses = gt.poses
    for i in range(n - window):
        rel_pred = compose(inverse(pred_poses[i]), pred_poses[i + window])
        rel_gt = compose(inverse(gt_poses[i]), gt_poses[i + window])
        err = compose(inverse(rel_gt), rel_pred)
        trans_sq.append(float((err.translation**2).sum()))
        rot_sq.append(err.rotation.angle() ** 2)
    return (
        float(np.sqrt(np.mean(trans_sq))),
        float(np.sqrt(np.mean(rot_sq))),
    )


def resize_depth(depth: DepthMap, out_width: int, out_height: int) -> DepthMap:
    """Validity-aware bilinear resize; identity (bit-exact) when sizes match.

    Each output pixel averages its valid bilinear neighbors with renormalized
    weights; it is invalid only when all contributing neighbors are invalid.
    """
    if (depth.width, depth.height) == (out_width, out_height):
        return depth
    in_h, in_w = depth.values.shape
    sx = in_w / out_width
    sy = in_h / out_height
    u = (np.arange(out_width, dtype=np.float64) + 0.5) * sx - 0.5
    v = (np.arange(out_height, dtype=np.float64) + 0.5) * sy - 0.5
    uu, vv = np.meshgrid(u, v)
    x0 = np.clip(np.floor(uu).astype(np.int64), 0, in_w - 1)
    y0 = np.clip(np.floor(vv).astype(np.int64), 0, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    a = np.clip(uu - x0, 0.0, 1.0)
    b = np.clip(vv - y0, 0.0, 1.0)
    weights = [
        ((1.0 - a) * (1.0 - b), y0, x0),
        (a * (1.0 - b), y0, x1),
        ((1.0 - a) * b, y1, x0),
        (a * b, y1, x1),
    ]
    total = np.zeros((out_height, out_width))
    wsum = np.zeros((out_height, out_width))
    for w, yy, xx in weights:
        m = depth.valid[yy, xx]
        contrib = np.where(m, w, 0.0)
        total += contrib * depth.values[yy, xx]
        wsum += contrib
    ok = wsum > 1e-12
    values = np.where(ok, total / np.where(ok, wsum, 1.0), 0.0)
    return DepthMap(values, ok)


def depth_metrics(pred: DepthMap, gt: DepthMap, cfg: DepthEvalConfig) -> DepthMetrics:
    """abs_rel, sq_rel, rmse, rmse_log, and delta < 1.25 (strict) over pixels
    where gt lies in [depth_min, depth_max] and pred is valid, after resizing
    both maps to the eval resolution and optional median scaling."""
    pred = resize_depth(pred, cfg.eval_width, cfg.eval_height)
    gt = resize_depth(gt, cfg.eval_width, cfg.eval_height)
    mask = (
        gt.valid
        & pred.valid
        & (gt.values >= cfg.depth_min)
        & (gt.values <= cfg.depth_max)
    )
    n = int(mask.sum())
    if n == 0:
        raise ValidationError("no valid pixels for depth evaluation")
    p = pred.values[mask]
    g = gt.values[mask]
    if cfg.median_scaling:
        ratio = float(np.median(g)) / float(np.median(p))
        p = p * ratio
    diff = p - g
    abs_rel = float((np.abs(diff) / g).mean())
    sq_rel = float((diff**2 / g).mean())
    rmse = float(np.sqrt((diff**2).mean()))
    log_diff = np.log(p) - np.log(g)
    rmse_log = float(np.sqrt((log_diff**2).mean()))
    thresh = np.maximum(p / g, g / p)
    delta = float((thresh < 1.25).sum() / n)
    return DepthMetrics(abs_rel, sq_rel, rmse, rmse_log, delta, n)
