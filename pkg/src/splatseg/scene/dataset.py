"""Per-scene dataset layout: images/, mask/, class.txt, an annotated splat
model, and a COLMAP model for the test views.

Masks are single-channel PNGs whose pixel value is the instance id
(0 = background). class.txt maps ids to names, one "<id> <name>" per line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from splatseg.errors import DatasetConsistencyError
from splatseg.scene.colmap import CameraView, load_colmap_cameras

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass
class DatasetScene:
    images_dir: Path
    mask_dir: Path
    model_path: Path | None
    class_map: dict[int, str]
    views: list[CameraView] = field(default_factory=list)

    def view_ids(self) -> list[str]:
        return [v.view_id for v in self.views]

    def mask_path(self, view_id: str) -> Path:
        return self.mask_dir / f"{view_id}.png"

    def load_mask(self, view_id: str) -> np.ndarray:
        return read_label_png(self.mask_path(view_id))


def read_label_png(path) -> np.ndarray:
    """Single-channel label image as int32 (8- or 16-bit PNGs)."""
    with Image.open(path) as img:
        if img.mode not in ("L", "I", "I;16"):
            img = img.convert("I")
        arr = np.array(img)
    return arr.astype(np.int32)


def write_label_png(path, labels: np.ndarray) -> None:
    """Write an int label map as a 16-bit single-channel PNG."""
    arr = np.asarray(labels)
    if arr.min() < 0 or arr.max() > 0xFFFF:
        raise ValueError("labels must fit in uint16 for PNG export")
    Image.fromarray(arr.astype(np.uint16)).save(path)


def _parse_class_txt(path) -> dict[int, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        ident, _, name = line.partition(" ")
        out[int(ident)] = name.strip()
    return out


def _find_colmap_dir(root: Path) -> Path | None:
    candidates = [root] + sorted(p for p in root.rglob("*") if p.is_dir())
    for cand in candidates:
        if (cand / "cameras.bin").exists() or (cand / "cameras.txt").exists():
            return cand
    return None


def _image_size(path) -> tuple[int, int]:
    with Image.open(path) as img:
        return img.size  # (width, height)


def load_dataset_scene(root) -> DatasetScene:
    """Load one scene folder. Every mask must pair with exactly one image of
    equal dimensions; orphans on either side raise DatasetConsistencyError."""
    root = Path(root)
    images_dir = root / "images"
    mask_dir = root / "mask"
    if not images_dir.is_dir():
        raise DatasetConsistencyError([str(images_dir)], f"{root}: missing images/ directory")
    if not mask_dir.is_dir():
        raise DatasetConsistencyError([str(mask_dir)], f"{root}: missing mask/ directory")

    images = {
        p.stem: p for p in sorted(images_dir.iterdir())
        if p.suffix.lower() in _IMAGE_SUFFIXES
    }
    masks = {
        p.stem: p for p in sorted(mask_dir.iterdir())
        if p.suffix.lower() == ".png"
    }
    orphans = sorted(set(images) ^ set(masks))
    if orphans:
        raise DatasetConsistencyError(
            orphans, f"{root}: images and masks do not pair one-to-one: {orphans}"
        )

    mismatched = [
        stem for stem in sorted(images)
        if _image_size(images[stem]) != _image_size(masks[stem])
    ]
    if mismatched:
        raise DatasetConsistencyError(
            mismatched, f"{root}: image/mask dimensions differ for: {mismatched}"
        )

    class_path = root / "class.txt"
    class_map = _parse_class_txt(class_path) if class_path.exists() else {}

    model_path = None
    for pattern in ("annotated_pretrained_model*/*.ply", "annotated_pretrained_model*.ply", "*.ply"):
        hits = sorted(root.glob(pattern))
        if hits:
            model_path = hits[0]
            break

    colmap_dir = _find_colmap_dir(root)
    if colmap_dir is not None:
        views = [v for v in load_colmap_cameras(colmap_dir) if v.view_id in masks]
    else:
        # no camera model shipped: synthesize identity-pose pinholes so the
        # 2D evaluation path (which only needs ids and dimensions) still runs
        views = []
        for stem in sorted(masks):
            width, height = _image_size(images[stem])
            views.append(
                CameraView(
                    width=width,
                    height=height,
                    focal_x=float(max(width, height)),
                    focal_y=float(max(width, height)),
                    principal_point=(width / 2.0, height / 2.0),
                    world_to_camera=np.eye(4),
                    view_id=stem,
                )
            )

    scene = DatasetScene(
        images_dir=images_dir,
        mask_dir=mask_dir,
        model_path=model_path,
        class_map=class_map,
        views=views,
    )

    if class_map:
        known = set(class_map) | {0}
        for stem, mask_path in sorted(masks.items()):
            present = {int(v) for v in np.unique(read_label_png(mask_path))}
            unknown = sorted(present - known)
            if unknown:
                raise DatasetConsistencyError(
                    [stem], f"{root}: mask {stem} uses ids {unknown} missing from class.txt"
                )
    return scene
