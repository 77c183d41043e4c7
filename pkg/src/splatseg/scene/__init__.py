from splatseg.scene.colmap import CameraView, load_colmap_cameras, pose_to_matrix
from splatseg.scene.dataset import (
    DatasetScene,
    load_dataset_scene,
    read_label_png,
    write_label_png,
)
from splatseg.scene.gaussians import (
    GaussianPrimitive,
    GaussianScene,
    load_gaussian_ply,
    quat_to_rotmat,
    save_labeled_ply,
)

__all__ = [
    "CameraView",
    "DatasetScene",
    "GaussianPrimitive",
    "GaussianScene",
    "load_colmap_cameras",
    "load_dataset_scene",
    "load_gaussian_ply",
    "pose_to_matrix",
    "quat_to_rotmat",
    "read_label_png",
    "save_labeled_ply",
    "write_label_png",
]
