"""HTTP API over the session manager, for the browser client.

Masks travel as base64 PNG inside JSON; previews as raw PNG bytes."""

from __future__ import annotations

import base64
import io
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from PIL import Image
from pydantic import BaseModel

from splatseg.config import PipelineParams
from splatseg.errors import (
    EmptyRoiError,
    NoHitError,
    PixelBoundsError,
    SceneSchemaError,
    SplatsegError,
)
from splatseg.session import SessionManager


class CreateSessionRequest(BaseModel):
    scene_path: str
    cameras_path: str
    params: dict | None = None


class ClickRequest(BaseModel):
    view_id: str
    u: float
    v: float
    target: Literal["new"] | int = "new"


class ExportRequest(BaseModel):
    out_dir: str


def _mask_to_b64(mask) -> str:
    arr = np.asarray(mask)
    buf = io.BytesIO()
    Image.fromarray(arr.astype(np.uint16)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _preview_to_png(rgb: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(rgb, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def create_app(manager: SessionManager | None = None) -> FastAPI:
    manager = manager or SessionManager()
    app = FastAPI(title="splatseg", version="0.1.0")
    app.state.manager = manager
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _session_or_404(session_id: str):
        try:
            return manager.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    @app.get("/sessions")
    def list_sessions():
        with manager._registry_lock:
            ids = sorted(manager._sessions)
        out = []
        for sid in ids:
            session = manager.get(sid)
            out.append({
                "session_id": sid,
                "view_ids": sorted(session.views),
                "primitive_count": len(session.scene),
            })
        return {"sessions": out}

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        try:
            params = PipelineParams.from_dict(req.params) if req.params else PipelineParams()
            session_id = manager.create_session(req.scene_path, req.cameras_path, params)
        except (SceneSchemaError, SplatsegError, FileNotFoundError, ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=f"{req.scene_path}: {exc}")
        session = manager.get(session_id)
        return {
            "session_id": session_id,
            "view_ids": sorted(session.views),
            "primitive_count": len(session.scene),
        }

    @app.post("/sessions/{session_id}/clicks")
    def add_click(session_id: str, req: ClickRequest):
        _session_or_404(session_id)
        try:
            result = manager.add_click_and_segment(
                session_id, req.view_id, (req.u, req.v), req.target
            )
        except NoHitError as exc:
            raise HTTPException(status_code=409, detail=f"empty-space click: {exc}")
        except EmptyRoiError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except PixelBoundsError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        payload = {
            "instance_id": result.instance_id,
            "labeled_count": result.labeled_count,
            "mask_png": _mask_to_b64(result.mask),
            "width": result.mask.width,
            "height": result.mask.height,
        }
        if not result.faithful:
            payload["faithfulness_warning"] = (
                "refined mask does not carry the instance id at the clicked pixel"
            )
        return payload

    @app.get("/sessions/{session_id}/views/{view_id}/mask")
    def get_mask(session_id: str, view_id: str, refined: bool = Query(default=True)):
        _session_or_404(session_id)
        try:
            _, mask = manager.render_view(session_id, view_id, refined=refined)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "view_id": view_id,
            "refined": refined,
            "mask_png": _mask_to_b64(mask),
            "width": mask.width,
            "height": mask.height,
            "instance_ids": [int(i) for i in mask.instance_ids()],
        }

    @app.get("/sessions/{session_id}/views/{view_id}/preview")
    def get_preview(session_id: str, view_id: str):
        _session_or_404(session_id)
        try:
            preview, _ = manager.render_view(session_id, view_id, refined=False)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return Response(content=_preview_to_png(preview), media_type="image/png")

    @app.post("/sessions/{session_id}/export")
    def export_results(session_id: str, req: ExportRequest):
        _session_or_404(session_id)
        try:
            manifest = manager.export_results(session_id, req.out_dir)
        except OSError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"out_dir": req.out_dir, "files": manifest}

    @app.get("/sessions/{session_id}/instances")
    def instances(session_id: str):
        _session_or_404(session_id)
        return manager.instance_summary(session_id)

    return app
