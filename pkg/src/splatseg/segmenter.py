"""Instance segmentation over Gaussian primitives: crop a cylindrical ROI
around the click anchor, split it into capped batches, run a per-point
backend, max-pool the per-batch logits, and write instance labels back into
the scene.

Label writes are the only scene mutation in the package and must be
serialized per scene (single writer); everything upstream is read-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from splatseg.errors import AlignmentError, CoverageError, EmptyRoiError
from splatseg.prompts import (
    AnchorPoint,
    AugmentedPoints,
    ClickPrompt,
    augment_gaussians,
    cast_ray,
    compute_weights,
    intersect_scene,
)
from splatseg.scene import CameraView, GaussianScene

CROP_RADIUS_M = 3.0
CROP_HEIGHT_M = 3.0
BATCH_CAP = 8192
DEFAULT_SEED = 42

LAST_WRITER_WINS = "last-writer-wins"
KEEP_EXISTING = "keep-existing"


@dataclass
class RoiSelection:
    """Scene indices inside the crop cylinder (strictly increasing)."""

    indices: np.ndarray
    anchor: AnchorPoint
    radius_m: float
    height_m: float

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)

    def __len__(self):
        return self.indices.shape[0]


@dataclass
class SegmentationLogits:
    """Paired foreground/background probabilities per ROI point."""

    fg: np.ndarray
    bg: np.ndarray

    def __post_init__(self):
        self.fg = np.asarray(self.fg, dtype=np.float64).reshape(-1)
        self.bg = np.asarray(self.bg, dtype=np.float64).reshape(-1)

    def __len__(self):
        return self.fg.shape[0]

    def validate(self):
        if self.fg.shape != self.bg.shape:
            raise AlignmentError("fg/bg length mismatch")
        if not (np.all(np.isfinite(self.fg)) and np.all(np.isfinite(self.bg))):
            raise ValueError("logits must be finite")
        if np.any(np.abs(self.fg + self.bg - 1.0) > 1e-6):
            raise ValueError("fg/bg pairs must sum to 1")


def crop_cylinder(
    scene: GaussianScene,
    anchor: AnchorPoint,
    radius_m: float = CROP_RADIUS_M,
    height_m: float = CROP_HEIGHT_M,
) -> RoiSelection:
    """Select primitives inside the vertical cylinder around the anchor:
    horizontal (x, y) distance <= radius and |dz| <= height/2, both
    inclusive, measured in meters. The axis is world z, so scenes must be
    gravity-aligned."""
    if radius_m <= 0 or height_m <= 0:
        raise ValueError("cylinder radius and height must be positive")
    pos = scene.positions.astype(np.float64)
    d = (pos - anchor.position) * scene.unit_scale
    horizontal2 = d[:, 0] ** 2 + d[:, 1] ** 2
    inside = (horizontal2 <= radius_m * radius_m) & (np.abs(d[:, 2]) <= height_m / 2.0)
    indices = np.nonzero(inside)[0]
    if indices.size == 0:
        raise EmptyRoiError("crop cylinder selected no primitives")
    return RoiSelection(indices=indices, anchor=anchor, radius_m=radius_m, height_m=height_m)


def make_batches(count: int, cap: int = BATCH_CAP, seed: int = DEFAULT_SEED) -> list[np.ndarray]:
    """Partition ROI positions 0..count-1 into ceil(count/cap) batches.

    A single batch passes the identity through; larger ROIs are split by a
    seeded uniform permutation into near-equal parts, each at most `cap`.
    """
    if count <= 0:
        raise ValueError("cannot batch an empty region of interest")
    if count <= cap:
        return [np.arange(count, dtype=np.int64)]
    k = -(-count // cap)
    perm = np.random.default_rng(seed).permutation(count).astype(np.int64)
    return list(np.array_split(perm, k))


def aggregate_logits(
    per_batch: list[SegmentationLogits],
    index_maps: list[np.ndarray],
    roi_size: int,
) -> SegmentationLogits:
    """Max-pool fg and bg independently over every batch containing a point,
    then renormalize each pair to sum to 1."""
    if len(per_batch) != len(index_maps):
        raise AlignmentError("one index map required per batch")
    fg = np.full(roi_size, -np.inf)
    bg = np.full(roi_size, -np.inf)
    covered = np.zeros(roi_size, dtype=bool)
    for logits, ix in zip(per_batch, index_maps):
        ix = np.asarray(ix, dtype=np.int64)
        if len(logits) != ix.shape[0]:
            raise AlignmentError("batch logits do not align with its index map")
        np.maximum.at(fg, ix, logits.fg)
        np.maximum.at(bg, ix, logits.bg)
        covered[ix] = True
    if not covered.all():
        missing = np.nonzero(~covered)[0]
        raise CoverageError(f"{missing.size} ROI points appear in no batch")
    total = fg + bg
    safe = total > 0
    fg = np.where(safe, fg / np.where(safe, total, 1.0), 0.5)
    bg = np.where(safe, bg / np.where(safe, total, 1.0), 0.5)
    out = SegmentationLogits(fg, bg)
    out.validate()
    return out


def assign_instance_labels(
    scene: GaussianScene,
    roi: RoiSelection,
    logits: SegmentationLogits,
    instance_id: int,
    overwrite: str = LAST_WRITER_WINS,
) -> int:
    """Write `instance_id` into the scene for every ROI point with
    fg strictly greater than bg. Returns the number written."""
    if instance_id < 1:
        raise ValueError("instance_id must be >= 1")
    if overwrite not in (LAST_WRITER_WINS, KEEP_EXISTING):
        raise ValueError(f"unknown overwrite policy {overwrite!r}")
    if len(logits) != len(roi):
        raise AlignmentError(
            f"logits length {len(logits)} != roi size {len(roi)}"
        )
    passes = logits.fg > logits.bg
    targets = roi.indices[passes]
    if overwrite == KEEP_EXISTING:
        current = scene.labels[targets]
        targets = targets[(current == 0) | (current == instance_id)]
    scene.labels[targets] = instance_id
    return int(targets.shape[0])


def segment_instance(
    scene: GaussianScene,
    views: dict[str, CameraView],
    clicks: list[ClickPrompt],
    backend,
    *,
    opacity_threshold: float = 0.9,
    sigma_m: float = 0.15,
    radius_m: float = CROP_RADIUS_M,
    height_m: float = CROP_HEIGHT_M,
    batch_cap: int = BATCH_CAP,
    seed: int = DEFAULT_SEED,
    overwrite: str = LAST_WRITER_WINS,
) -> int:
    """Full pipeline for one instance: anchor every click, merge weight maps
    by element-wise max, crop around the first click's anchor, batch, run the
    backend, aggregate, and write labels. Returns the labeled count."""
    if not clicks:
        raise ValueError("at least one click is required")
    instance_ids = {c.instance_id for c in clicks}
    if len(instance_ids) != 1:
        raise ValueError("all clicks must prompt for one instance")
    (instance_id,) = instance_ids

    anchors = []
    for click in clicks:
        view = views[click.view_id]
        click.validate(view)
        origin, direction = cast_ray(view, click.pixel)
        anchors.append(intersect_scene(scene, origin, direction, opacity_threshold))

    weights = compute_weights(scene, anchors[0], sigma_m).weights
    for anchor in anchors[1:]:
        np.maximum(weights, compute_weights(scene, anchor, sigma_m).weights, out=weights)
    aug = augment_gaussians(scene, _as_weight_map(weights, len(scene)))

    roi = crop_cylinder(scene, anchors[0], radius_m, height_m)
    roi_points = aug.take(roi.indices)

    if hasattr(backend, "set_anchor"):
        backend.set_anchor(anchors[0])
    index_maps = make_batches(len(roi), batch_cap, seed)
    per_batch = []
    for ix in index_maps:
        logits = backend.segment(roi_points.take(ix))
        logits.validate()
        per_batch.append(logits)
    merged = aggregate_logits(per_batch, index_maps, len(roi))
    return assign_instance_labels(scene, roi, merged, instance_id, overwrite)


def _as_weight_map(weights, scene_size):
    from splatseg.prompts import WeightMap

    wm = WeightMap(weights)
    wm.validate(scene_size)
    return wm
