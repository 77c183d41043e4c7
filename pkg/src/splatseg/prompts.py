"""Click prompt encoding: ray casting, opacity-accumulation anchoring, and
per-primitive spatial relevance weights.

A click (u, v) in a view becomes a world-space ray; marching the ray
front-to-back over the primitives (each evaluated once at the ray point
closest to its center, standard splat compositing) accumulates
transmittance-weighted opacity until it first exceeds the threshold, which
fixes the 3D anchor. Every primitive then gets a Gaussian-kernel weight of
its distance (in meters) to the anchor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from splatseg.errors import AlignmentError, NoHitError, PixelBoundsError
from splatseg.scene import CameraView, GaussianScene

OPACITY_THRESHOLD = 0.9  # accumulated-opacity stop criterion
WEIGHT_SIGMA_M = 0.15  # meters; spatial sensitivity of the click weight
_COV_REGULARIZATION = 1e-8  # added to scale^2 so planar primitives invert
_TINY = np.finfo(np.float64).tiny  # weights stay in (0, 1] under underflow


@dataclass
class ClickPrompt:
    """A 2D click prompting for one instance in one view."""

    pixel: tuple[float, float]  # (u, v)
    view_id: str
    instance_id: int

    def validate(self, view: CameraView):
        u, v = self.pixel
        if not view.contains_pixel(u, v):
            raise PixelBoundsError(
                f"pixel ({u}, {v}) outside view {view.view_id} ({view.width}x{view.height})"
            )
        if self.instance_id < 1:
            raise ValueError("instance_id must be >= 1")


@dataclass
class AnchorPoint:
    """Where the click ray anchored in 3D."""

    position: np.ndarray
    ray_origin: np.ndarray
    ray_direction: np.ndarray  # unit
    depth: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64).reshape(3)
        self.ray_origin = np.asarray(self.ray_origin, dtype=np.float64).reshape(3)
        self.ray_direction = np.asarray(self.ray_direction, dtype=np.float64).reshape(3)

    def validate(self):
        if abs(np.linalg.norm(self.ray_direction) - 1.0) > 1e-9:
            raise ValueError("ray_direction must be unit length")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        recon = self.ray_origin + self.depth * self.ray_direction
        if np.max(np.abs(recon - self.position)) > 1e-6:
            raise ValueError("position does not lie on the ray at the stored depth")


@dataclass
class WeightMap:
    """Per-primitive spatial relevance in (0, 1], aligned to scene order."""

    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)

    def validate(self, scene_size: int):
        if self.weights.shape[0] != scene_size:
            raise AlignmentError(
                f"weight map length {self.weights.shape[0]} != scene size {scene_size}"
            )
        if np.any(self.weights <= 0) or np.any(self.weights > 1):
            raise ValueError("weights must lie in (0, 1]")


@dataclass
class AugmentedPoints:
    """Per-point features (x, y, z, r, g, b, weight) handed to the backend,
    aligned to scene primitive order via `source_indices`."""

    features: np.ndarray  # (M, 7) float64
    source_indices: np.ndarray  # (M,) int64 scene indices

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64).reshape(-1, 7)
        self.source_indices = np.asarray(self.source_indices, dtype=np.int64).reshape(-1)

    def __len__(self):
        return self.features.shape[0]

    @property
    def positions(self) -> np.ndarray:
        return self.features[:, 0:3]

    @property
    def weights(self) -> np.ndarray:
        return self.features[:, 6]

    def take(self, rows) -> "AugmentedPoints":
        return AugmentedPoints(self.features[rows], self.source_indices[rows])


def cast_ray(view: CameraView, pixel) -> tuple[np.ndarray, np.ndarray]:
    """World-space ray through a pixel: (camera center, unit direction)."""
    u, v = float(pixel[0]), float(pixel[1])
    if not view.contains_pixel(u, v):
        raise PixelBoundsError(
            f"pixel ({u}, {v}) outside view ({view.width}x{view.height})"
        )
    cx, cy = view.principal_point
    direction_cam = np.array([
        (u - cx) / view.focal_x,
        (v - cy) / view.focal_y,
        1.0,
    ])
    direction = view.rotation.T @ direction_cam
    direction /= np.linalg.norm(direction)
    return view.camera_center(), direction


def intersect_scene(
    scene: GaussianScene,
    origin,
    direction,
    opacity_threshold: float = OPACITY_THRESHOLD,
) -> AnchorPoint:
    """March the ray front-to-back over primitives sorted by the depth of
    their center projection onto the ray; each contributes
    alpha = opacity * exp(-0.5 d^T Sigma^-1 d) at its closest-approach point.
    The anchor sits at the depth where accumulated transmittance-weighted
    opacity first exceeds the threshold; raises NoHitError otherwise."""
    scene.validate()
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    direction = np.asarray(direction, dtype=np.float64).reshape(3)
    direction = direction / np.linalg.norm(direction)

    mu = scene.positions.astype(np.float64)
    t = (mu - origin) @ direction  # depth of each center's projection
    in_front = t > 0
    if not np.any(in_front):
        raise NoHitError("no primitives in front of the ray origin")

    idx = np.nonzero(in_front)[0]
    delta = origin + t[idx, None] * direction - mu[idx]

    # Sigma^-1 = R diag(1/(scale^2 + reg)) R^T, evaluated without forming
    # matrices: y = R^T delta, quad = sum(y^2 / (scale^2 + reg))
    rot = _rotation_matrices(scene.rotations[idx])
    y = np.einsum("nij,nj->ni", rot.transpose(0, 2, 1), delta)
    inv_var = 1.0 / (scene.scales[idx].astype(np.float64) ** 2 + _COV_REGULARIZATION)
    quad = np.einsum("ni,ni->n", y * y, inv_var)

    alpha = scene.opacities[idx].astype(np.float64) * np.exp(-0.5 * quad)

    order = np.lexsort((idx, t[idx]))  # depth ascending, ties by index
    alpha = alpha[order]
    depths = t[idx][order]
    transmittance = np.cumprod(1.0 - alpha)
    accumulated = np.cumsum(alpha * np.concatenate(([1.0], transmittance[:-1])))

    hits = np.nonzero(accumulated > opacity_threshold)[0]
    if hits.size == 0:
        raise NoHitError(
            f"accumulated opacity peaked at {accumulated[-1] if accumulated.size else 0.0:.4f}"
            f" <= threshold {opacity_threshold}"
        )
    depth = float(depths[hits[0]])
    return AnchorPoint(
        position=origin + depth * direction,
        ray_origin=origin,
        ray_direction=direction,
        depth=depth,
    )


def _rotation_matrices(quats: np.ndarray) -> np.ndarray:
    """(N, 3, 3) rotation matrices from (N, 4) quaternions (w, x, y, z)."""
    q = quats.astype(np.float64)
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((q.shape[0], 3, 3))
    out[:, 0, 0] = 1 - 2 * (y * y + z * z)
    out[:, 0, 1] = 2 * (x * y - w * z)
    out[:, 0, 2] = 2 * (x * z + w * y)
    out[:, 1, 0] = 2 * (x * y + w * z)
    out[:, 1, 1] = 1 - 2 * (x * x + z * z)
    out[:, 1, 2] = 2 * (y * z - w * x)
    out[:, 2, 0] = 2 * (x * z - w * y)
    out[:, 2, 1] = 2 * (y * z + w * x)
    out[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return out


def compute_weights(
    scene: GaussianScene,
    anchor: AnchorPoint,
    sigma: float = WEIGHT_SIGMA_M,
) -> WeightMap:
    """w_i = exp(-|mu_i - anchor|^2 / (2 sigma^2)), distances in meters."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    diff = (scene.positions.astype(np.float64) - anchor.position) * scene.unit_scale
    dist2 = np.einsum("ni,ni->n", diff, diff)
    weights = np.exp(-dist2 / (2.0 * sigma * sigma))
    np.maximum(weights, _TINY, out=weights)
    wm = WeightMap(weights)
    wm.validate(len(scene))
    return wm


def augment_gaussians(scene: GaussianScene, weights: WeightMap) -> AugmentedPoints:
    """Stack (position, color, weight) per primitive, in scene order."""
    if weights.weights.shape[0] != len(scene):
        raise AlignmentError(
            f"weight map length {weights.weights.shape[0]} != scene size {len(scene)}"
        )
    features = np.concatenate(
        [
            scene.positions.astype(np.float64),
            scene.colors.astype(np.float64),
            weights.weights[:, None],
        ],
        axis=1,
    )
    return AugmentedPoints(features, np.arange(len(scene), dtype=np.int64))
