"""Timing harnesses: scene preparation, per-frame rendering and refinement,
and the compiled-vs-fallback kernel comparison.

Per-frame numbers are medians of at least 20 runs after 3 warmups; the
preparation pass uses fewer runs since it includes file I/O.
"""

from __future__ import annotations

import os
import statistics
import tempfile
import time
from pathlib import Path

import numpy as np

from splatseg._kernels import KERNEL_BACKEND, get_impl
from splatseg.backends import BaselineGeometricBackend
from splatseg.projection import project_gaussians, render_instance_mask
from splatseg.prompts import ClickPrompt
from splatseg.refine import RefineParams, disk_offsets, refine_mask
from splatseg.scene import load_gaussian_ply, save_labeled_ply
from splatseg.segmenter import segment_instance
from splatseg.synthetic import look_at_view, make_cluster_scene

RENDER_RUNS = 20
RENDER_WARMUPS = 3
PREPARE_RUNS = 5


def _median_time(fn, runs, warmups=0):
    for _ in range(warmups):
        fn()
    samples = []
    for _ in range(runs):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def _effective_threads(requested: int) -> int:
    return min(requested, os.cpu_count() or 1)


def _bench_scene(size: int, seed: int = 0):
    """Cluster scene with 7 instances sized to `size` total primitives."""
    per_cluster = max(1, size // 7)
    scene, gt, centers = make_cluster_scene(
        n_clusters=7, points_per_cluster=per_cluster, seed=seed
    )
    return scene, gt, centers


def _frame_view(width, height, distance=11.0):
    return look_at_view(
        eye=(distance, 0.0, 4.0),
        target=(0.0, 0.0, 0.0),
        width=width,
        height=height,
        view_id="bench",
    )


def bench_render(size=500_000, width=640, height=480, threads=1,
                 runs=RENDER_RUNS, seed=0) -> dict:
    """Per-frame timings on a synthetic labeled scene: projection,
    rasterization (single-thread and at the requested thread count), and
    Alg.-style refinement of the rendered multi-instance mask."""
    scene, gt, _ = _bench_scene(size, seed)
    scene.labels[:] = gt
    view = _frame_view(width, height)

    project = _median_time(lambda: project_gaussians(scene, view), runs, RENDER_WARMUPS)
    projected = project_gaussians(scene, view)
    raster_1 = _median_time(
        lambda: render_instance_mask(projected, view, threads=1), runs, RENDER_WARMUPS
    )
    raster_n = _median_time(
        lambda: render_instance_mask(projected, view, threads=threads), runs, RENDER_WARMUPS
    )
    mask = render_instance_mask(projected, view, threads=1)
    params = RefineParams()
    refine_all = _median_time(lambda: refine_mask(mask.labels, params), max(3, runs // 4))
    ids = [int(i) for i in np.unique(mask.labels) if i > 0]
    per_instance = []
    for ident in ids:
        single = np.where(mask.labels == ident, ident, 0).astype(np.int32)
        per_instance.append(
            _median_time(lambda m=single: refine_mask(m, params), 3)
        )
    return {
        "kernel_backend": KERNEL_BACKEND,
        "scene_size": len(scene),
        "frame": [width, height],
        "threads_requested": threads,
        "threads_effective": _effective_threads(threads),
        "project_ms": project * 1e3,
        "raster_ms_1thread": raster_1 * 1e3,
        "raster_ms_threads": raster_n * 1e3,
        "refine_all_instances_ms": refine_all * 1e3,
        "refine_per_instance_ms": [t * 1e3 for t in per_instance],
        "instance_count": len(ids),
        "runs": runs,
    }


def bench_prepare(size=500_000, scene_path=None, runs=PREPARE_RUNS, seed=0) -> dict:
    """Scene load plus a full 7-instance segmentation pass with the baseline
    backend (one click per instance at the projected cluster centers)."""
    tmp = None
    if scene_path is None:
        scene, gt, centers = _bench_scene(size, seed)
        tmp = tempfile.NamedTemporaryFile(suffix=".ply", delete=False)
        save_labeled_ply(scene, tmp.name)
        scene_path = tmp.name
    else:
        loaded = load_gaussian_ply(scene_path)
        centers = []
        for ident in np.unique(loaded.labels):
            if ident > 0:
                centers.append(loaded.positions[loaded.labels == ident].mean(axis=0))
        centers = np.asarray(centers, dtype=np.float64)
        if centers.size == 0:
            raise ValueError(f"{scene_path}: scene carries no instance labels to click")

    view = _frame_view(640, 480)
    clicks = []
    for k, center in enumerate(centers):
        cam = view.world_to_camera[:3, :3] @ center + view.world_to_camera[:3, 3]
        u = view.focal_x * cam[0] / cam[2] + view.principal_point[0]
        v = view.focal_y * cam[1] / cam[2] + view.principal_point[1]
        clicks.append(ClickPrompt(pixel=(float(u), float(v)), view_id="bench",
                                  instance_id=k + 1))

    def one_pass():
        scene = load_gaussian_ply(scene_path)
        scene.labels[:] = 0
        backend = BaselineGeometricBackend(growth_radius_m=0.08, unit_scale=scene.unit_scale)
        views = {"bench": view}
        total = 0
        for click in clicks:
            total += segment_instance(scene, views, [click], backend)
        return total

    elapsed = _median_time(one_pass, runs)
    if tmp is not None:
        Path(tmp.name).unlink(missing_ok=True)
    return {
        "kernel_backend": KERNEL_BACKEND,
        "scene_path": str(scene_path),
        "instances": len(clicks),
        "prepare_s": elapsed,
        "runs": runs,
    }


def bench_kernels(raster_size=200_000, grow_size=50_000, mask_hw=(480, 640), seed=0) -> dict:
    """Compiled vs pure-Python hot-kernel comparison."""
    rng = np.random.default_rng(seed)
    h, w = mask_hw
    xs = rng.uniform(0, w, raster_size)
    ys = rng.uniform(0, h, raster_size)
    labels = rng.integers(1, 8, raster_size).astype(np.int32)

    pts = rng.normal(scale=0.25, size=(grow_size, 3))
    mask = np.zeros((h, w), dtype=np.uint8)
    mask[h // 4: 3 * h // 4, w // 4: 3 * w // 4] = 1
    mask[(rng.random((h, w)) < 0.002)] = 1
    dy, dx = disk_offsets(5)

    rows = {}
    for name in ("compiled", "purepy"):
        try:
            impl = get_impl(name)
        except (ImportError, ValueError):
            continue
        rows[name] = {
            "rasterize_ms": _median_time(
                lambda: impl.rasterize_first_hit(xs, ys, labels, h, w, 4.0, True, 1), 5, 1
            ) * 1e3,
            "region_grow_ms": _median_time(
                lambda: impl.region_grow(pts, 0, 0.05), 3, 1
            ) * 1e3,
            "close_ms": _median_time(
                lambda: impl.binary_erode(impl.binary_dilate(mask, dy, dx), dy, dx), 3, 1
            ) * 1e3,
            "components_ms": _median_time(
                lambda: impl.label_components(mask, 8), 5, 1
            ) * 1e3,
            "flood_ms": _median_time(
                lambda: impl.background_reachable(mask), 5, 1
            ) * 1e3,
        }
    out = {"active_backend": KERNEL_BACKEND, "timings": rows}
    if "compiled" in rows and "purepy" in rows:
        out["speedup"] = {
            key.replace("_ms", ""): rows["purepy"][key] / rows["compiled"][key]
            for key in rows["compiled"]
        }
    return out


def format_table(result: dict, title: str) -> str:
    lines = [title, "-" * len(title)]
    for key, value in result.items():
        if isinstance(value, float):
            lines.append(f"  {key:28s} {value:12.3f}")
        elif isinstance(value, dict):
            lines.append(f"  {key}:")
            for k2, v2 in value.items():
                if isinstance(v2, dict):
                    body = ", ".join(f"{k3}={v3:.2f}" for k3, v3 in v2.items())
                    lines.append(f"    {k2:24s} {body}")
                else:
                    lines.append(f"    {k2:24s} {v2:12.3f}")
        elif isinstance(value, list) and value and isinstance(value[0], float):
            body = ", ".join(f"{v:.2f}" for v in value)
            lines.append(f"  {key:28s} [{body}]")
        else:
            lines.append(f"  {key:28s} {value}")
    return "\n".join(lines)
