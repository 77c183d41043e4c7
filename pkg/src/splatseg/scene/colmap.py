"""Camera views and COLMAP table ingestion (text and binary, PINHOLE /
SIMPLE_PINHOLE only)."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from splatseg.errors import SceneSchemaError, UnsupportedCameraModelError
from splatseg.scene.gaussians import quat_to_rotmat

# COLMAP model id -> (name, parameter count)
_CAMERA_MODELS = {
    0: ("SIMPLE_PINHOLE", 3),
    1: ("PINHOLE", 4),
    2: ("SIMPLE_RADIAL", 4),
    3: ("RADIAL", 5),
    4: ("OPENCV", 8),
    5: ("OPENCV_FISHEYE", 8),
    6: ("FULL_OPENCV", 12),
    7: ("FOV", 5),
    8: ("SIMPLE_RADIAL_FISHEYE", 4),
    9: ("RADIAL_FISHEYE", 5),
    10: ("THIN_PRISM_FISHEYE", 12),
}


@dataclass
class CameraView:
    """Pinhole intrinsics plus a rigid world-to-camera transform."""

    width: int
    height: int
    focal_x: float
    focal_y: float
    principal_point: np.ndarray  # (cx, cy) pixels
    world_to_camera: np.ndarray  # 4x4
    view_id: str = ""

    def __post_init__(self):
        self.principal_point = np.asarray(self.principal_point, dtype=np.float64).reshape(2)
        self.world_to_camera = np.asarray(self.world_to_camera, dtype=np.float64).reshape(4, 4)

    def validate(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("view dimensions must be positive")
        r = self.world_to_camera[:3, :3]
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-5):
            raise ValueError("world_to_camera rotation block is not orthonormal")

    @property
    def rotation(self) -> np.ndarray:
        return self.world_to_camera[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.world_to_camera[:3, 3]

    def camera_center(self) -> np.ndarray:
        """Camera origin in world coordinates (-R^T t)."""
        return -self.rotation.T @ self.translation

    def contains_pixel(self, u, v) -> bool:
        return 0 <= u < self.width and 0 <= v < self.height


def pose_to_matrix(qvec, tvec) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = quat_to_rotmat(qvec)
    m[:3, 3] = np.asarray(tvec, dtype=np.float64)
    return m


def _intrinsics(model_name, params):
    if model_name == "SIMPLE_PINHOLE":
        f, cx, cy = params[:3]
        return f, f, cx, cy
    if model_name == "PINHOLE":
        fx, fy, cx, cy = params[:4]
        return fx, fy, cx, cy
    raise UnsupportedCameraModelError(model_name)


def _read_cameras_text(path):
    cams = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        cam_id, model = int(parts[0]), parts[1]
        width, height = int(parts[2]), int(parts[3])
        params = [float(p) for p in parts[4:]]
        cams[cam_id] = (model, width, height, params)
    return cams


def _read_cameras_binary(path):
    cams = {}
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<Q", fh.read(8))
        for _ in range(n):
            cam_id, model_id, width, height = struct.unpack("<iiQQ", fh.read(24))
            if model_id not in _CAMERA_MODELS:
                raise UnsupportedCameraModelError(f"model id {model_id}")
            name, nparams = _CAMERA_MODELS[model_id]
            params = struct.unpack("<" + "d" * nparams, fh.read(8 * nparams))
            cams[cam_id] = (name, int(width), int(height), list(params))
    return cams


def _read_images_text(path):
    images = []
    lines = [
        ln for ln in Path(path).read_text().splitlines()
        if not ln.lstrip().startswith("#")
    ]
    # records are two lines: pose, then 2D points (possibly empty)
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        parts = lines[i].split()
        qvec = [float(p) for p in parts[1:5]]
        tvec = [float(p) for p in parts[5:8]]
        cam_id = int(parts[8])
        name = parts[9]
        images.append((name, qvec, tvec, cam_id))
        i += 2
    return images


def _read_images_binary(path):
    images = []
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<Q", fh.read(8))
        for _ in range(n):
            data = struct.unpack("<idddddddi", fh.read(64))
            qvec = list(data[1:5])
            tvec = list(data[5:8])
            cam_id = data[8]
            name = b""
            while True:
                c = fh.read(1)
                if c in (b"\x00", b""):
                    break
                name += c
            (npts,) = struct.unpack("<Q", fh.read(8))
            fh.seek(24 * npts, 1)  # skip 2D point records
            images.append((name.decode("utf-8"), qvec, tvec, cam_id))
    return images


def load_colmap_cameras(directory) -> list[CameraView]:
    """One CameraView per registered image from a COLMAP model directory
    (cameras/images in .txt or .bin form). Views are sorted by image name."""
    directory = Path(directory)
    if (directory / "cameras.bin").exists():
        cams = _read_cameras_binary(directory / "cameras.bin")
    elif (directory / "cameras.txt").exists():
        cams = _read_cameras_text(directory / "cameras.txt")
    else:
        raise SceneSchemaError("cameras", f"{directory}: no cameras.bin or cameras.txt")
    if (directory / "images.bin").exists():
        images = _read_images_binary(directory / "images.bin")
    elif (directory / "images.txt").exists():
        images = _read_images_text(directory / "images.txt")
    else:
        raise SceneSchemaError("images", f"{directory}: no images.bin or images.txt")

    views = []
    for name, qvec, tvec, cam_id in sorted(images, key=lambda rec: rec[0]):
        model, width, height, params = cams[cam_id]
        fx, fy, cx, cy = _intrinsics(model, params)
        views.append(
            CameraView(
                width=width,
                height=height,
                focal_x=fx,
                focal_y=fy,
                principal_point=(cx, cy),
                world_to_camera=pose_to_matrix(qvec, tvec),
                view_id=Path(name).stem,
            )
        )
    for view in views:
        view.validate()
    return views
