"""Project per-primitive instance labels into 2D masks.

Projection is plain pinhole on the Gaussian centers; rasterization stamps
each center onto the pixels within a fixed squared distance (4.0 px^2), in
depth order, first writer wins, skipping unlabeled primitives. Footprints
deliberately ignore covariance: label propagation wants crisp nearest-center
stamping, not alpha blending. The preview render uses the same pass but
paints the base color of the first primitive within the threshold, labeled
or not.

The tile kernel is embarrassingly parallel (a tile owns its pixels), so
results are identical for any thread count.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

import numpy as np
from PIL import Image

from splatseg import _kernels
from splatseg.scene import CameraView, GaussianScene

RHO2_THRESHOLD = 4.0  # squared pixel distance a center can stamp across
NEAR_PLANE = 0.01


@dataclass
class ProjectedPrimitive:
    center_px: tuple[float, float]
    depth: float
    label: int
    source_index: int


class ProjectedGaussians:
    """Depth-sorted projected centers, struct-of-arrays."""

    def __init__(self, xs, ys, depths, labels, source_indices):
        self.xs = np.ascontiguousarray(xs, dtype=np.float64)
        self.ys = np.ascontiguousarray(ys, dtype=np.float64)
        self.depths = np.ascontiguousarray(depths, dtype=np.float64)
        self.labels = np.ascontiguousarray(labels, dtype=np.int32)
        self.source_indices = np.ascontiguousarray(source_indices, dtype=np.int64)

    def __len__(self):
        return self.xs.shape[0]

    def __getitem__(self, i) -> ProjectedPrimitive:
        return ProjectedPrimitive(
            center_px=(float(self.xs[i]), float(self.ys[i])),
            depth=float(self.depths[i]),
            label=int(self.labels[i]),
            source_index=int(self.source_indices[i]),
        )


@dataclass
class InstanceMask:
    """Instance-id image, 0 = background."""

    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int32)
        if self.labels.ndim != 2:
            raise ValueError("mask must be 2-D")
        if self.labels.min(initial=0) < 0:
            raise ValueError("instance ids must be non-negative")

    @property
    def height(self):
        return self.labels.shape[0]

    @property
    def width(self):
        return self.labels.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.labels if dtype is None else self.labels.astype(dtype)

    def instance_ids(self) -> np.ndarray:
        ids = np.unique(self.labels)
        return ids[ids > 0]


def project_gaussians(scene: GaussianScene, view: CameraView,
                      near: float = NEAR_PLANE) -> ProjectedGaussians:
    """Pinhole-project all centers; cull those at camera depth <= near;
    sort by ascending depth, ties by scene index."""
    w2c = view.world_to_camera
    pos = scene.positions.astype(np.float64)
    cam = pos @ w2c[:3, :3].T + w2c[:3, 3]
    z = cam[:, 2]
    keep = z > near
    idx = np.nonzero(keep)[0]
    cx, cy = view.principal_point
    xs = view.focal_x * cam[idx, 0] / z[idx] + cx
    ys = view.focal_y * cam[idx, 1] / z[idx] + cy
    order = np.lexsort((idx, z[idx]))
    return ProjectedGaussians(
        xs=xs[order],
        ys=ys[order],
        depths=z[idx][order],
        labels=scene.labels[idx[order]],
        source_indices=idx[order],
    )


def render_instance_mask(
    projected: ProjectedGaussians,
    view: CameraView,
    rho2_threshold: float = RHO2_THRESHOLD,
    threads: int = 1,
) -> InstanceMask:
    """Rasterize instance ids: per pixel, the nearest-in-depth labeled
    primitive whose center lies within the squared-distance threshold."""
    winner = _kernels.rasterize_first_hit(
        projected.xs, projected.ys, projected.labels,
        view.height, view.width, rho2_threshold, True, threads,
    )
    labels = np.zeros((view.height, view.width), dtype=np.int32)
    hit = winner >= 0
    labels[hit] = projected.labels[winner[hit]]
    return InstanceMask(labels)


def render_preview(
    scene: GaussianScene,
    view: CameraView,
    rho2_threshold: float = RHO2_THRESHOLD,
    threads: int = 1,
) -> np.ndarray:
    """Flat-color preview: each pixel takes the base color of the first
    primitive within the stamping threshold; black background. Returns
    (H, W, 3) uint8."""
    projected = project_gaussians(scene, view)
    winner = _kernels.rasterize_first_hit(
        projected.xs, projected.ys, projected.labels,
        view.height, view.width, rho2_threshold, False, threads,
    )
    out = np.zeros((view.height, view.width, 3), dtype=np.uint8)
    hit = winner >= 0
    colors = scene.colors[projected.source_indices[winner[hit]]]
    out[hit] = np.clip(colors * 255.0 + 0.5, 0, 255).astype(np.uint8)
    return out


def instance_color(instance_id: int) -> tuple[int, int, int]:
    """Deterministic, well-separated color for an instance id."""
    hue = (instance_id * 0.6180339887498949) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.65, 0.95)
    return int(r * 255), int(g * 255), int(b * 255)


def colorize_mask(mask) -> np.ndarray:
    """Human-viewable 8-bit RGB rendering of a label map."""
    labels = np.asarray(mask)
    out = np.zeros(labels.shape + (3,), dtype=np.uint8)
    for ident in np.unique(labels):
        if ident == 0:
            continue
        out[labels == ident] = instance_color(int(ident))
    return out


def save_mask_png(mask, path) -> None:
    """16-bit single-channel PNG, pixel value = instance id."""
    from splatseg.scene.dataset import write_label_png

    write_label_png(path, np.asarray(mask))


def save_mask_color_png(mask, path) -> None:
    Image.fromarray(colorize_mask(mask), mode="RGB").save(path)


def save_preview_png(rgb: np.ndarray, path) -> None:
    Image.fromarray(rgb, mode="RGB").save(path)
