import base64
import copy
import hashlib
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from conftest import build_test_dataset, click_pixel_for_point, write_views_as_colmap
from splatseg.scene import load_gaussian_ply, save_labeled_ply
from splatseg.service import create_app
from splatseg.session import SessionManager
from splatseg.synthetic import make_cluster_scene, make_orbit_views


@pytest.fixture(scope="module")
def service_world(tmp_path_factory):
    """Scene PLY + COLMAP model on disk, shared app/client."""
    tmp = tmp_path_factory.mktemp("service")
    scene, gt, centers, views = _small_world()
    scene_path = tmp / "scene.ply"
    labeled = copy.deepcopy(scene)
    labeled.labels[:] = gt
    save_labeled_ply(labeled, scene_path)  # create_session zeroes labels
    cameras_dir = write_views_as_colmap(tmp / "colmap", views)
    manager = SessionManager()
    client = TestClient(create_app(manager))
    return {
        "client": client,
        "manager": manager,
        "scene_path": str(scene_path),
        "cameras_dir": str(cameras_dir),
        "gt": gt,
        "centers": centers,
        "views": views,
    }


def _small_world():
    scene, gt, centers = make_cluster_scene(
        n_clusters=3, points_per_cluster=900, cluster_radius=0.25,
        center_spacing=3.5, seed=21,
    )
    views = make_orbit_views(distance=10.0, elevation=0.5, count=4,
                             width=128, height=96)
    return scene, gt, centers, views


def _create(world, growth=0.1):
    resp = world["client"].post("/sessions", json={
        "scene_path": world["scene_path"],
        "cameras_path": world["cameras_dir"],
        "params": {"growth_radius_m": growth},
    })
    assert resp.status_code == 200, resp.text
    return resp.json()


def _decode_mask(payload):
    raw = base64.b64decode(payload["mask_png"])
    return np.array(Image.open(io.BytesIO(raw))).astype(np.int32)


class TestSessionEndpoints:
    def test_create_session(self, service_world):
        body = _create(service_world)
        assert body["primitive_count"] == 2700
        assert len(body["view_ids"]) == 4

    def test_two_sessions_distinct(self, service_world):
        a = _create(service_world)["session_id"]
        b = _create(service_world)["session_id"]
        assert a != b

    def test_bad_ply_is_422(self, service_world):
        resp = service_world["client"].post("/sessions", json={
            "scene_path": service_world["scene_path"] + ".missing",
            "cameras_path": service_world["cameras_dir"],
        })
        assert resp.status_code == 422

    def test_click_segments_and_is_faithful(self, service_world):
        body = _create(service_world)
        sid = body["session_id"]
        view = service_world["views"][0]
        u, v = click_pixel_for_point(view, service_world["centers"][0])
        resp = service_world["client"].post(f"/sessions/{sid}/clicks", json={
            "view_id": view.view_id, "u": u, "v": v, "target": "new",
        })
        assert resp.status_code == 200, resp.text
        payload = resp.json()
        assert payload["instance_id"] == 1
        assert payload["labeled_count"] == 900
        assert "faithfulness_warning" not in payload
        mask = _decode_mask(payload)
        assert mask[int(v), int(u)] == 1

    def test_click_out_of_bounds_is_422(self, service_world):
        sid = _create(service_world)["session_id"]
        view_id = service_world["views"][0].view_id
        resp = service_world["client"].post(f"/sessions/{sid}/clicks", json={
            "view_id": view_id, "u": -1.0, "v": 5.0, "target": "new",
        })
        assert resp.status_code == 422

    def test_empty_space_click_is_409(self, service_world):
        sid = _create(service_world)["session_id"]
        view_id = service_world["views"][0].view_id
        resp = service_world["client"].post(f"/sessions/{sid}/clicks", json={
            "view_id": view_id, "u": 1.0, "v": 1.0, "target": "new",
        })
        assert resp.status_code == 409
        assert "empty-space" in resp.json()["detail"]

    def test_unknown_instance_is_404(self, service_world):
        sid = _create(service_world)["session_id"]
        view = service_world["views"][0]
        u, v = click_pixel_for_point(view, service_world["centers"][0])
        resp = service_world["client"].post(f"/sessions/{sid}/clicks", json={
            "view_id": view.view_id, "u": u, "v": v, "target": 7,
        })
        assert resp.status_code == 404

    def test_unknown_session_is_404(self, service_world):
        resp = service_world["client"].get("/sessions/nope/views/v/mask")
        assert resp.status_code == 404

    def test_mask_and_preview_endpoints(self, service_world):
        sid = _create(service_world)["session_id"]
        view = service_world["views"][1]
        resp = service_world["client"].get(
            f"/sessions/{sid}/views/{view.view_id}/mask", params={"refined": "false"}
        )
        assert resp.status_code == 200
        payload = resp.json()
        mask = _decode_mask(payload)
        assert mask.shape == (96, 128)
        assert not mask.any()  # no labels yet
        assert payload["instance_ids"] == []

        resp = service_world["client"].get(
            f"/sessions/{sid}/views/{view.view_id}/preview"
        )
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        preview = np.array(Image.open(io.BytesIO(resp.content)))
        assert preview.shape == (96, 128, 3)
        assert preview.any()  # clusters are visible

        resp = service_world["client"].get(f"/sessions/{sid}/views/ghost/mask")
        assert resp.status_code == 404

    def test_masks_share_ids_across_views(self, service_world):
        sid = _create(service_world)["session_id"]
        client = service_world["client"]
        for k in (0, 1):
            view = service_world["views"][k]
            u, v = click_pixel_for_point(view, service_world["centers"][k])
            resp = client.post(f"/sessions/{sid}/clicks", json={
                "view_id": view.view_id, "u": u, "v": v, "target": "new",
            })
            assert resp.status_code == 200
        id_sets = []
        for view in service_world["views"]:
            payload = client.get(
                f"/sessions/{sid}/views/{view.view_id}/mask"
            ).json()
            id_sets.append(set(payload["instance_ids"]))
        for ids in id_sets:
            assert ids <= {1, 2}
        assert set.union(*id_sets) == {1, 2}

    def test_instances_summary(self, service_world):
        sid = _create(service_world)["session_id"]
        view = service_world["views"][0]
        u, v = click_pixel_for_point(view, service_world["centers"][1])
        service_world["client"].post(f"/sessions/{sid}/clicks", json={
            "view_id": view.view_id, "u": u, "v": v, "target": "new",
        })
        payload = service_world["client"].get(f"/sessions/{sid}/instances").json()
        assert payload["next_instance_id"] == 2
        assert payload["instances"] == [
            {"id": 1, "primitive_count": 900, "click_count": 1}
        ]

    def test_session_isolation(self, service_world):
        sid_a = _create(service_world)["session_id"]
        sid_b = _create(service_world)["session_id"]
        view = service_world["views"][0]
        u, v = click_pixel_for_point(view, service_world["centers"][0])
        service_world["client"].post(f"/sessions/{sid_a}/clicks", json={
            "view_id": view.view_id, "u": u, "v": v, "target": "new",
        })
        labels_b = service_world["manager"].get(sid_b).scene.labels
        assert not labels_b.any()

    def test_export_and_reexport_identical(self, service_world, tmp_path):
        sid = _create(service_world)["session_id"]
        client = service_world["client"]
        view = service_world["views"][0]
        u, v = click_pixel_for_point(view, service_world["centers"][2])
        client.post(f"/sessions/{sid}/clicks", json={
            "view_id": view.view_id, "u": u, "v": v, "target": "new",
        })
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        resp = client.post(f"/sessions/{sid}/export", json={"out_dir": str(out_a)})
        assert resp.status_code == 200
        manifest = resp.json()["files"]
        assert "labeled.ply" in manifest and "manifest.json" in manifest
        for name in manifest:
            assert (out_a / name).exists(), name
        reloaded = load_gaussian_ply(out_a / "labeled.ply")
        assert int(np.sum(reloaded.labels == 1)) == 900

        client.post(f"/sessions/{sid}/export", json={"out_dir": str(out_b)})
        for name in manifest:
            assert (hashlib.sha256((out_a / name).read_bytes()).hexdigest()
                    == hashlib.sha256((out_b / name).read_bytes()).hexdigest()), name


class TestSecondClickExistingInstance:
    def test_labeled_count_non_decreasing(self, service_world):
        sid = _create(service_world)["session_id"]
        client = service_world["client"]
        view0 = service_world["views"][0]
        center = service_world["centers"][0]
        u, v = click_pixel_for_point(view0, center)
        first = client.post(f"/sessions/{sid}/clicks", json={
            "view_id": view0.view_id, "u": u, "v": v, "target": "new",
        }).json()
        view1 = service_world["views"][1]
        u2, v2 = click_pixel_for_point(view1, center + np.array([0.05, 0.0, 0.05]))
        second = client.post(f"/sessions/{sid}/clicks", json={
            "view_id": view1.view_id, "u": u2, "v": v2, "target": 1,
        })
        assert second.status_code == 200, second.text
        assert second.json()["instance_id"] == 1
        assert second.json()["labeled_count"] >= first["labeled_count"]


class TestExplicitCameraRender:
    def test_render_view_accepts_ad_hoc_camera(self, service_world):
        from splatseg.synthetic import look_at_view

        sid = _create(service_world)["session_id"]
        camera = look_at_view((0.0, 10.0, 5.0), (0, 0, 0), width=64, height=48,
                              view_id="adhoc")
        preview, mask = service_world["manager"].render_view(
            sid, camera=camera, refined=False
        )
        assert preview.shape == (48, 64, 3)
        assert mask.labels.shape == (48, 64)
        assert preview.any()
