"""Interactive segmentation sessions.

A session owns one scene, its camera views, the accumulated clicks, and the
per-session tunables. Segmentation requests are serialized (labels have a
single writer); renders take a shared read lock so they can overlap each
other but never an in-flight segmentation.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from splatseg.backends import make_backend
from splatseg.config import PipelineParams
from splatseg.errors import PixelBoundsError
from splatseg.projection import (
    InstanceMask,
    project_gaussians,
    render_instance_mask,
    render_preview,
    save_mask_color_png,
    save_mask_png,
    save_preview_png,
)
from splatseg.prompts import ClickPrompt
from splatseg.refine import refine_mask
from splatseg.scene import (
    CameraView,
    GaussianScene,
    load_colmap_cameras,
    load_gaussian_ply,
    save_labeled_ply,
)
from splatseg.segmenter import segment_instance


class _ReadWriteLock:
    """Writer-preferring RW lock: many readers or one writer."""

    def __init__(self):
        self._mutex = threading.Lock()
        self._readers_done = threading.Condition(self._mutex)
        self._readers = 0

    def acquire_read(self):
        with self._mutex:
            self._readers += 1

    def release_read(self):
        with self._mutex:
            self._readers -= 1
            if self._readers == 0:
                self._readers_done.notify_all()

    def acquire_write(self):
        self._mutex.acquire()
        while self._readers > 0:
            self._readers_done.wait()

    def release_write(self):
        self._mutex.release()


@dataclass
class Session:
    session_id: str
    scene: GaussianScene
    views: dict[str, CameraView]
    params: PipelineParams
    clicks: list[ClickPrompt] = field(default_factory=list)
    next_instance_id: int = 1
    backend: object = None
    lock: _ReadWriteLock = field(default_factory=_ReadWriteLock)

    def clicks_for(self, instance_id: int) -> list[ClickPrompt]:
        return [c for c in self.clicks if c.instance_id == instance_id]

    def assigned_ids(self) -> list[int]:
        return sorted({c.instance_id for c in self.clicks})


@dataclass
class ClickResult:
    instance_id: int
    labeled_count: int
    mask: InstanceMask
    faithful: bool


class SessionManager:
    """All live sessions; thread-safe."""

    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()

    def create_session(self, scene_path, cameras_path, params: PipelineParams | None = None) -> str:
        params = params or PipelineParams()
        scene = load_gaussian_ply(scene_path)
        scene.labels[:] = 0
        views = {v.view_id: v for v in load_colmap_cameras(cameras_path)}
        return self.create_session_from(scene, views, params)

    def create_session_from(self, scene, views, params: PipelineParams | None = None) -> str:
        """Seat an in-memory scene (synthetic fixtures, tests)."""
        params = params or PipelineParams()
        session_id = uuid.uuid4().hex
        backend = make_backend(
            params.backend_spec,
            unit_scale=scene.unit_scale,
            growth_radius_m=params.growth_radius_m,
        )
        session = Session(
            session_id=session_id,
            scene=scene,
            views=dict(views),
            params=params,
            backend=backend,
        )
        with self._registry_lock:
            self._sessions[session_id] = session
        return session_id

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            if session_id not in self._sessions:
                raise KeyError(f"unknown session {session_id}")
            return self._sessions[session_id]

    def drop(self, session_id: str):
        with self._registry_lock:
            self._sessions.pop(session_id, None)

    # -- operations ---------------------------------------------------------

    def add_click_and_segment(self, session_id, view_id, pixel, target="new") -> ClickResult:
        """Record a click, re-run segmentation for its instance over all of
        that instance's clicks, and return the refined mask for the click's
        view. The mask is faithful when the clicked pixel carries the
        instance id after refinement."""
        session = self.get(session_id)
        if view_id not in session.views:
            raise KeyError(f"unknown view {view_id}")
        view = session.views[view_id]
        u, v = float(pixel[0]), float(pixel[1])
        if not view.contains_pixel(u, v):
            raise PixelBoundsError(f"pixel ({u}, {v}) outside view {view_id}")

        if target == "new":
            instance_id = session.next_instance_id
        else:
            instance_id = int(target)
            if instance_id not in session.assigned_ids():
                raise KeyError(f"unknown instance id {instance_id}")

        click = ClickPrompt(pixel=(u, v), view_id=view_id, instance_id=instance_id)
        clicks = session.clicks_for(instance_id) + [click]

        session.lock.acquire_write()
        try:
            params = session.params
            count = segment_instance(
                session.scene,
                session.views,
                clicks,
                session.backend,
                opacity_threshold=params.opacity_threshold,
                sigma_m=params.sigma_m,
                radius_m=params.crop_radius_m,
                height_m=params.crop_height_m,
                batch_cap=params.batch_cap,
                seed=params.seed,
                overwrite=params.overwrite,
            )
            # the click sticks only once segmentation survived anchoring
            session.clicks.append(click)
            if target == "new":
                session.next_instance_id = instance_id + 1
            mask = self._render_mask(session, view, refined=True)
        finally:
            session.lock.release_write()

        faithful = int(mask.labels[int(v), int(u)]) == instance_id
        return ClickResult(
            instance_id=instance_id,
            labeled_count=count,
            mask=mask,
            faithful=faithful,
        )

    def _render_mask(self, session: Session, view: CameraView, refined: bool) -> InstanceMask:
        params = session.params
        projected = project_gaussians(session.scene, view)
        mask = render_instance_mask(projected, view, params.rho2_threshold, params.threads)
        if refined:
            mask = InstanceMask(refine_mask(mask.labels, params.refine))
        return mask

    def render_view(self, session_id, view_id=None, refined=False, camera: CameraView | None = None):
        """(preview RGB, InstanceMask) for a stored view id or an explicit
        camera."""
        session = self.get(session_id)
        if camera is None:
            if view_id not in session.views:
                raise KeyError(f"unknown view {view_id}")
            camera = session.views[view_id]
        session.lock.acquire_read()
        try:
            mask = self._render_mask(session, camera, refined)
            preview = render_preview(
                session.scene, camera, session.params.rho2_threshold, session.params.threads
            )
        finally:
            session.lock.release_read()
        return preview, mask

    def export_results(self, session_id, out_dir) -> list[str]:
        """Write the labeled PLY, per-view refined mask PNGs (raw ids and
        colorized), previews, and the params; returns the manifest."""
        session = self.get(session_id)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest: list[str] = []

        session.lock.acquire_read()
        try:
            ply_path = out / "labeled.ply"
            save_labeled_ply(session.scene, ply_path)
            manifest.append(ply_path.name)
            for view_id in sorted(session.views):
                view = session.views[view_id]
                mask = self._render_mask(session, view, refined=True)
                preview = render_preview(
                    session.scene, view, session.params.rho2_threshold, session.params.threads
                )
                mask_path = out / f"{view_id}_mask.png"
                color_path = out / f"{view_id}_mask_color.png"
                preview_path = out / f"{view_id}_preview.png"
                save_mask_png(mask, mask_path)
                save_mask_color_png(mask, color_path)
                save_preview_png(preview, preview_path)
                manifest += [mask_path.name, color_path.name, preview_path.name]
            params_path = out / "params.json"
            payload = dict(session.params.to_dict())
            payload["clicks"] = [
                {"view_id": c.view_id, "u": c.pixel[0], "v": c.pixel[1],
                 "instance_id": c.instance_id}
                for c in session.clicks
            ]
            params_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
            manifest.append(params_path.name)
        finally:
            session.lock.release_read()

        (out / "manifest.json").write_text(
            json.dumps({"files": manifest}, indent=2) + "\n"
        )
        return manifest + ["manifest.json"]

    def instance_summary(self, session_id) -> dict:
        session = self.get(session_id)
        labels = session.scene.labels
        instances = []
        for ident in session.assigned_ids():
            instances.append({
                "id": ident,
                "primitive_count": int(np.sum(labels == ident)),
                "click_count": len(session.clicks_for(ident)),
            })
        return {
            "instances": instances,
            "next_instance_id": session.next_instance_id,
        }
