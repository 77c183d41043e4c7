"""Click-count study: segment every ground-truth instance from n random
interior clicks and evaluate, for each n in a grid.

Clicks are sampled (seeded) from the 2-px-eroded interior of the instance's
ground-truth masks so they never land on boundaries; clicks that fail to
anchor (reconstruction voids) are dropped."""

from __future__ import annotations

import csv

import numpy as np

from splatseg import _kernels
from splatseg.backends import make_backend
from splatseg.errors import EmptyRoiError, NoHitError
from splatseg.metrics import REPORT_COLUMNS, evaluate_views
from splatseg.projection import project_gaussians, render_instance_mask
from splatseg.prompts import ClickPrompt, cast_ray, intersect_scene
from splatseg.refine import RefineParams, disk_offsets, refine_mask
from splatseg.scene import load_dataset_scene, load_gaussian_ply
from splatseg.segmenter import segment_instance

CLICK_EROSION_RADIUS = 2


def _interior_clicks(gt_masks, views_order, instance_id, n, rng):
    """Up to n (view_id, u, v) samples from the eroded instance interior."""
    dy, dx = disk_offsets(CLICK_EROSION_RADIUS)
    candidates = []
    for vid in views_order:
        binary = (np.asarray(gt_masks[vid]) == instance_id).astype(np.uint8)
        interior = _kernels.binary_erode(binary, dy, dx)
        if not interior.any():
            interior = binary
        rows, cols = np.nonzero(interior)
        candidates.extend((vid, int(u), int(v)) for v, u in zip(rows, cols))
    if not candidates:
        return []
    take = min(n, len(candidates))
    picks = rng.choice(len(candidates), size=take, replace=False)
    return [candidates[i] for i in sorted(int(p) for p in picks)]


def run_sweep(
    dataset_root,
    n_list,
    seed: int = 42,
    backend_spec: str = "baseline",
    growth_radius_m: float = 0.03,
    threads: int = 1,
    refine_params: RefineParams | None = None,
) -> list[dict]:
    """One metrics row per click count n."""
    if any(n < 1 for n in n_list):
        raise ValueError("click counts must be >= 1")
    dataset = load_dataset_scene(dataset_root)
    if dataset.model_path is None:
        raise ValueError(f"{dataset_root}: no annotated model PLY for the sweep")
    gt_scene = load_gaussian_ply(dataset.model_path)
    gt_3d = gt_scene.labels.copy()
    instance_ids = [int(k) for k in np.unique(gt_3d) if k > 0]
    if not instance_ids:
        raise ValueError(f"{dataset.model_path}: model carries no instance labels")

    views = {v.view_id: v for v in dataset.views}
    views_order = sorted(views)
    gt_masks = {vid: dataset.load_mask(vid) for vid in views_order}
    refine_params = refine_params or RefineParams()

    rows = []
    for n in n_list:
        scene = load_gaussian_ply(dataset.model_path)
        scene.labels[:] = 0
        backend = make_backend(backend_spec, unit_scale=scene.unit_scale,
                               growth_radius_m=growth_radius_m)
        for ident in instance_ids:
            rng = np.random.default_rng([seed, n, ident])
            samples = _interior_clicks(gt_masks, views_order, ident, n, rng)
            clicks = []
            for vid, u, v in samples:
                try:
                    origin, direction = cast_ray(views[vid], (u, v))
                    intersect_scene(scene, origin, direction)
                except NoHitError:
                    continue
                clicks.append(ClickPrompt(pixel=(u, v), view_id=vid, instance_id=ident))
            if not clicks:
                continue
            try:
                segment_instance(scene, views, clicks, backend, seed=seed)
            except (NoHitError, EmptyRoiError):
                continue

        pred_masks = {}
        for vid in views_order:
            projected = project_gaussians(scene, views[vid])
            mask = render_instance_mask(projected, views[vid], threads=threads)
            pred_masks[vid] = refine_mask(mask.labels, refine_params)
        report = evaluate_views(views_order, pred_masks, gt_masks,
                                scene.labels, gt_3d)
        row = {"n_clicks": n}
        row.update({k: v for k, v in report.to_dict().items() if k in REPORT_COLUMNS})
        rows.append(row)
    return rows


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_clicks"] + REPORT_COLUMNS)
        for row in rows:
            writer.writerow(
                [row["n_clicks"]]
                + ["" if row[c] is None else f"{row[c]:.6f}" for c in REPORT_COLUMNS]
            )
