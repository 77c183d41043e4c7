import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from splatseg.scene import GaussianScene
from splatseg.synthetic import make_cluster_scene, make_orbit_views


def write_ascii_ply(path, columns: dict, count: int | None = None,
                    types: dict | None = None):
    """Hand-rolled ASCII PLY writer, independent of the package's writer.

    columns: {property_name: 1-D array}; property order follows dict order.
    """
    names = list(columns)
    count = count if count is not None else len(next(iter(columns.values())))
    types = types or {}
    lines = ["ply", "format ascii 1.0", f"element vertex {count}"]
    for name in names:
        lines.append(f"property {types.get(name, 'float')} {name}")
    lines.append("end_header")
    for i in range(count):
        lines.append(" ".join(repr(float(columns[name][i])) for name in names))
    Path(path).write_text("\n".join(lines) + "\n")
    return path


def standard_ply_columns(n, rng=None, with_labels=False, planar=False):
    """Splat-convention columns (opacity logit, log scales) for n vertices."""
    rng = rng or np.random.default_rng(0)
    cols = {
        "x": rng.normal(size=n),
        "y": rng.normal(size=n),
        "z": rng.normal(size=n),
        "opacity": rng.normal(size=n),  # logit
        "scale_0": rng.normal(size=n, scale=0.3),
        "scale_1": rng.normal(size=n, scale=0.3),
    }
    if not planar:
        cols["scale_2"] = rng.normal(size=n, scale=0.3)
    quats = rng.normal(size=(n, 4))
    quats /= np.linalg.norm(quats, axis=1, keepdims=True)
    for i in range(4):
        cols[f"rot_{i}"] = quats[:, i]
    if with_labels:
        cols["inst_label"] = rng.integers(0, 4, size=n)
    return cols


def tiny_scene(positions, opacities=None, scales=0.1, labels=None, colors=None,
               unit_scale=1.0):
    """Scene with identity rotations for geometric unit tests."""
    positions = np.asarray(positions, dtype=np.float32).reshape(-1, 3)
    n = positions.shape[0]
    quats = np.zeros((n, 4), dtype=np.float32)
    quats[:, 0] = 1.0
    if np.isscalar(scales):
        scales = np.full((n, 3), scales, dtype=np.float32)
    return GaussianScene(
        positions=positions,
        scales=np.asarray(scales, dtype=np.float32).reshape(n, 3),
        rotations=quats,
        opacities=np.ones(n, dtype=np.float32) if opacities is None
        else np.asarray(opacities, dtype=np.float32),
        colors=np.full((n, 3), 0.5, dtype=np.float32) if colors is None
        else np.asarray(colors, dtype=np.float32).reshape(n, 3),
        labels=np.zeros(n, dtype=np.int32) if labels is None
        else np.asarray(labels, dtype=np.int32),
        unit_scale=unit_scale,
    )


def write_colmap_text(directory, cameras, images):
    """cameras: [(id, model, w, h, params)], images: [(id, qvec, tvec, cam_id, name)]."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cam_lines = ["# cameras"]
    for cam_id, model, w, h, params in cameras:
        cam_lines.append(
            f"{cam_id} {model} {w} {h} " + " ".join(repr(float(p)) for p in params)
        )
    (directory / "cameras.txt").write_text("\n".join(cam_lines) + "\n")
    img_lines = ["# images"]
    for img_id, qvec, tvec, cam_id, name in images:
        pose = " ".join(repr(float(v)) for v in list(qvec) + list(tvec))
        img_lines.append(f"{img_id} {pose} {cam_id} {name}")
        img_lines.append("")  # empty 2D-point line
    (directory / "images.txt").write_text("\n".join(img_lines) + "\n")
    return directory


@pytest.fixture(scope="session")
def cluster_fixture():
    """Shared well-separated 5-cluster scene with orbit cameras."""
    scene, gt, centers = make_cluster_scene(
        n_clusters=5, points_per_cluster=2500, cluster_radius=0.3,
        center_spacing=4.0, seed=11,
    )
    views = make_orbit_views(distance=11.0, elevation=0.5, count=8,
                             width=160, height=120)
    return scene, gt, centers, views


def click_pixel_for_point(view, point):
    """Projected pixel of a world point in a view."""
    w2c = view.world_to_camera
    cam = w2c[:3, :3] @ np.asarray(point, dtype=np.float64) + w2c[:3, 3]
    u = view.focal_x * cam[0] / cam[2] + view.principal_point[0]
    v = view.focal_y * cam[1] / cam[2] + view.principal_point[1]
    return float(u), float(v)


def write_views_as_colmap(directory, views):
    """Serialize CameraViews as a COLMAP text model (PINHOLE)."""
    from scipy.spatial.transform import Rotation

    cameras = []
    images = []
    for k, view in enumerate(views, start=1):
        cameras.append((
            k, "PINHOLE", view.width, view.height,
            [view.focal_x, view.focal_y,
             view.principal_point[0], view.principal_point[1]],
        ))
        x, y, z, w = Rotation.from_matrix(view.rotation).as_quat()
        images.append((k, [w, x, y, z], list(view.translation), k,
                       f"{view.view_id}.png"))
    return write_colmap_text(directory, cameras, images)


def build_test_dataset(root, scene, gt_labels, views):
    """Evaluation scene folder from a synthetic labeled scene:
    rendered previews as images, rendered label maps as masks, the
    gt-labeled PLY as the annotated model, and a COLMAP text model."""
    import copy

    from PIL import Image

    from splatseg.projection import project_gaussians, render_instance_mask, render_preview
    from splatseg.scene import save_labeled_ply
    from splatseg.scene.dataset import write_label_png

    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "mask").mkdir(exist_ok=True)
    labeled = copy.deepcopy(scene)
    labeled.labels[:] = gt_labels
    for view in views:
        mask = render_instance_mask(project_gaussians(labeled, view), view)
        write_label_png(root / "mask" / f"{view.view_id}.png", mask.labels)
        preview = render_preview(labeled, view)
        Image.fromarray(preview, "RGB").save(root / "images" / f"{view.view_id}.png")
    ids = sorted(int(i) for i in np.unique(gt_labels) if i > 0)
    (root / "class.txt").write_text(
        "\n".join(f"{i} object{i}" for i in ids) + "\n"
    )
    save_labeled_ply(labeled, root / "annotated_model.ply")
    write_views_as_colmap(root / "colmap", views)
    return root
