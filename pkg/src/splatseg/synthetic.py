"""Synthetic scenes and camera rigs for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from splatseg.scene import CameraView, GaussianScene


def _unit_quats(n, rng=None):
    if rng is None:
        q = np.zeros((n, 4))
        q[:, 0] = 1.0
        return q.astype(np.float32)
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return q.astype(np.float32)


def make_random_scene(count: int, extent: float = 5.0, seed: int = 0) -> GaussianScene:
    """Uniform box of primitives with random appearance; labels all zero."""
    rng = np.random.default_rng(seed)
    return GaussianScene(
        positions=rng.uniform(-extent, extent, (count, 3)).astype(np.float32),
        scales=rng.uniform(0.01, 0.1, (count, 3)).astype(np.float32),
        rotations=_unit_quats(count, rng),
        opacities=rng.uniform(0.5, 1.0, count).astype(np.float32),
        colors=rng.uniform(0.05, 1.0, (count, 3)).astype(np.float32),
        labels=np.zeros(count, dtype=np.int32),
    )


def make_cluster_scene(
    n_clusters: int = 5,
    points_per_cluster: int = 2500,
    cluster_radius: float = 0.3,
    center_spacing: float = 4.0,
    seed: int = 0,
):
    """Well-separated spherical blobs on a ring, staggered in z.

    Centers sit on a circle of radius `center_spacing` so pairwise distances
    are far larger than the cluster radius. Returns (scene, gt_labels) with
    scene labels zeroed and gt labels 1..n_clusters.
    """
    rng = np.random.default_rng(seed)
    positions = []
    gt = []
    centers = []
    for k in range(n_clusters):
        angle = 2.0 * np.pi * k / n_clusters
        center = np.array([
            center_spacing * np.cos(angle),
            center_spacing * np.sin(angle),
            0.4 * ((k % 2) - 0.5),
        ])
        centers.append(center)
        # rejection-free uniform ball
        direction = rng.normal(size=(points_per_cluster, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = cluster_radius * rng.random(points_per_cluster) ** (1.0 / 3.0)
        positions.append(center + direction * radius[:, None])
        gt.append(np.full(points_per_cluster, k + 1, dtype=np.int32))
    positions = np.concatenate(positions).astype(np.float32)
    n = positions.shape[0]
    palette = np.array(
        [[0.9, 0.2, 0.2], [0.2, 0.8, 0.3], [0.25, 0.4, 0.95],
         [0.95, 0.8, 0.2], [0.8, 0.3, 0.9], [0.2, 0.85, 0.85],
         [0.95, 0.55, 0.2]],
        dtype=np.float32,
    )
    gt = np.concatenate(gt)
    scene = GaussianScene(
        positions=positions,
        scales=np.full((n, 3), 0.03, dtype=np.float32),
        rotations=_unit_quats(n),
        opacities=np.ones(n, dtype=np.float32),
        colors=palette[(gt - 1) % len(palette)],
        labels=np.zeros(n, dtype=np.int32),
    )
    return scene, gt, np.array(centers)


def look_at_view(
    eye,
    target,
    width: int = 160,
    height: int = 120,
    focal: float | None = None,
    view_id: str = "view",
    world_up=(0.0, 0.0, 1.0),
) -> CameraView:
    """Pinhole view at `eye` looking toward `target` (image x right, y down,
    z forward)."""
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - eye
    forward /= np.linalg.norm(forward)
    up = np.asarray(world_up, dtype=np.float64)
    right = np.cross(forward, up)
    if np.linalg.norm(right) < 1e-8:
        right = np.cross(forward, np.array([0.0, 1.0, 0.0]))
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    rot = np.stack([right, down, forward])
    w2c = np.eye(4)
    w2c[:3, :3] = rot
    w2c[:3, 3] = -rot @ eye
    view = CameraView(
        width=width,
        height=height,
        focal_x=focal or 0.9 * max(width, height),
        focal_y=focal or 0.9 * max(width, height),
        principal_point=(width / 2.0, height / 2.0),
        world_to_camera=w2c,
        view_id=view_id,
    )
    view.validate()
    return view


def make_orbit_views(
    target=(0.0, 0.0, 0.0),
    distance: float = 10.0,
    elevation: float = 0.45,
    count: int = 8,
    width: int = 160,
    height: int = 120,
    focal: float | None = None,
) -> list[CameraView]:
    """Cameras on a ring around the target, all looking at it."""
    target = np.asarray(target, dtype=np.float64)
    views = []
    for k in range(count):
        angle = 2.0 * np.pi * k / count
        eye = target + distance * np.array([
            np.cos(angle) * np.cos(elevation),
            np.sin(angle) * np.cos(elevation),
            np.sin(elevation),
        ])
        views.append(
            look_at_view(eye, target, width, height, focal, view_id=f"orbit{k:02d}")
        )
    return views
