"""Command-line interface: serve the HTTP API, evaluate predictions, run
benchmarks, and sweep click counts."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from splatseg.config import PipelineParams, resolve_seed


def _add_pipeline_flags(parser):
    parser.add_argument("--backend", default="baseline",
                        help="'baseline' or 'external:<command>'")
    parser.add_argument("--seed", type=int, default=None,
                        help="pipeline seed (SPLATSEG_SEED overrides)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--sigma", type=float, default=0.15,
                        help="click weight spatial sensitivity, meters")
    parser.add_argument("--radius", type=float, default=3.0,
                        help="crop cylinder radius, meters")
    parser.add_argument("--height", type=float, default=3.0,
                        help="crop cylinder height, meters")
    parser.add_argument("--rho2", type=float, default=4.0,
                        help="rasterizer squared-distance threshold, px^2")
    parser.add_argument("--growth-radius", type=float, default=0.03,
                        help="baseline backend growth radius, meters")


def _params_from_args(args) -> PipelineParams:
    return PipelineParams(
        sigma_m=args.sigma,
        crop_radius_m=args.radius,
        crop_height_m=args.height,
        growth_radius_m=args.growth_radius,
        rho2_threshold=args.rho2,
        seed=resolve_seed(args.seed),
        threads=args.threads,
        backend_spec=args.backend,
    )


def _cmd_serve(args) -> int:
    import uvicorn

    from splatseg.service import create_app
    from splatseg.session import SessionManager

    manager = SessionManager()
    params = _params_from_args(args)
    if args.scene and args.cameras:
        session_id = manager.create_session(args.scene, args.cameras, params)
        print(f"session ready: {session_id}")
    app = create_app(manager)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_evaluate(args) -> int:
    from splatseg.errors import MissingViewError
    from splatseg.metrics import evaluate_run, write_report_csv, write_report_json
    from splatseg.scene import load_dataset_scene, load_gaussian_ply, read_label_png

    dataset = load_dataset_scene(args.dataset_root)
    pred_dir = Path(args.pred_dir)
    pred_masks = {}
    for vid in dataset.view_ids():
        path = pred_dir / f"{vid}.png"
        if path.exists():
            pred_masks[vid] = read_label_png(path)
    pred_3d = None
    if args.pred_ply:
        pred_3d = load_gaussian_ply(args.pred_ply).labels

    try:
        report = evaluate_run(dataset, pred_masks, pred_3d)
    except MissingViewError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    out_dir = Path(args.out_dir or args.pred_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_json(report, out_dir / "report.json")
    write_report_csv(report, out_dir / "report.csv")
    for key, value in report.to_dict().items():
        if key == "per_class_iou":
            continue
        shown = "n/a" if value is None else f"{value:.4f}"
        print(f"{key:12s} {shown}")
    print(f"report written to {out_dir}/report.json and report.csv")
    return 0


def _cmd_bench(args) -> int:
    from splatseg import bench

    if args.what == "render":
        result = bench.bench_render(size=args.size, threads=args.threads,
                                    runs=args.runs, width=args.width,
                                    height=args.height)
        title = "per-frame render"
    elif args.what == "prepare":
        result = bench.bench_prepare(size=args.size, scene_path=args.scene,
                                     runs=max(1, args.runs // 4))
        title = "scene preparation"
    else:
        result = bench.bench_kernels()
        title = "kernel comparison (compiled vs purepy)"
    print(bench.format_table(result, title))
    if args.out:
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n")
    return 0


def _cmd_demo_scene(args) -> int:
    import numpy as np

    from splatseg.scene import save_labeled_ply
    from splatseg.synthetic import make_cluster_scene, make_orbit_views

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scene, gt, centers = make_cluster_scene(
        n_clusters=args.clusters,
        points_per_cluster=args.points,
        seed=resolve_seed(args.seed),
    )
    scene.labels[:] = gt
    save_labeled_ply(scene, out / "scene.ply")
    views = make_orbit_views(distance=11.0, elevation=0.5, count=args.views,
                             width=args.width, height=args.height)
    _write_views_as_colmap(out / "colmap", views)

    clicks = {}
    for view in views:
        w2c = view.world_to_camera
        per_view = []
        for center in centers:
            cam = w2c[:3, :3] @ center + w2c[:3, 3]
            per_view.append({
                "u": float(view.focal_x * cam[0] / cam[2] + view.principal_point[0]),
                "v": float(view.focal_y * cam[1] / cam[2] + view.principal_point[1]),
            })
        clicks[view.view_id] = per_view
    (out / "clicks.json").write_text(json.dumps({
        "view_ids": [v.view_id for v in views],
        "width": args.width,
        "height": args.height,
        "cluster_centers": np.asarray(centers).tolist(),
        "projected_centers": clicks,
    }, indent=2) + "\n")
    print(f"demo scene written to {out} (scene.ply, colmap/, clicks.json)")
    print(f"serve it with: splatseg serve --scene {out / 'scene.ply'} "
          f"--cameras {out / 'colmap'}")
    return 0


def _write_views_as_colmap(directory, views):
    from scipy.spatial.transform import Rotation

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    cam_lines = []
    img_lines = []
    for k, view in enumerate(views, start=1):
        intr = [float(view.focal_x), float(view.focal_y),
                float(view.principal_point[0]), float(view.principal_point[1])]
        cam_lines.append(
            f"{k} PINHOLE {view.width} {view.height} "
            + " ".join(repr(v) for v in intr)
        )
        x, y, z, w = Rotation.from_matrix(view.rotation).as_quat()
        pose = [float(v) for v in (w, x, y, z, *view.translation)]
        img_lines.append(
            f"{k} " + " ".join(repr(v) for v in pose) + f" {k} {view.view_id}.png"
        )
        img_lines.append("")
    (directory / "cameras.txt").write_text("\n".join(cam_lines) + "\n")
    (directory / "images.txt").write_text("\n".join(img_lines) + "\n")


def _cmd_clicks_sweep(args) -> int:
    from splatseg.sweep import run_sweep, write_sweep_csv

    n_list = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
    if not n_list or any(n < 1 for n in n_list):
        print("error: click counts must be positive integers", file=sys.stderr)
        return 2
    rows = run_sweep(
        args.dataset,
        n_list,
        seed=resolve_seed(args.seed),
        backend_spec=args.backend,
        growth_radius_m=args.growth_radius,
        threads=args.threads,
    )
    out = Path(args.out)
    write_sweep_csv(rows, out)
    for row in rows:
        cells = " ".join(
            f"{k}={v:.4f}" for k, v in row.items()
            if k != "n_clicks" and v is not None
        )
        print(f"n={row['n_clicks']:3d} {cells}")
    print(f"sweep written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splatseg",
        description="Interactive instance segmentation for Gaussian-splat scenes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP session API")
    p_serve.add_argument("--scene", help="splat PLY to preload as a session")
    p_serve.add_argument("--cameras", help="COLMAP model directory for the scene")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    _add_pipeline_flags(p_serve)
    p_serve.set_defaults(fn=_cmd_serve)

    p_eval = sub.add_parser("evaluate", help="score predicted masks against a dataset scene")
    p_eval.add_argument("dataset_root")
    p_eval.add_argument("pred_dir", help="directory of <view_id>.png predicted masks")
    p_eval.add_argument("--pred-ply", help="predicted labels PLY for 3D IoU")
    p_eval.add_argument("--out-dir", help="where to write report.json/report.csv")
    p_eval.set_defaults(fn=_cmd_evaluate)

    p_bench = sub.add_parser("bench", help="timing harnesses")
    p_bench.add_argument("what", choices=["render", "prepare", "kernels"])
    p_bench.add_argument("--size", type=int, default=500_000,
                         help="synthetic scene size")
    p_bench.add_argument("--scene", help="PLY to bench instead of a synthetic scene")
    p_bench.add_argument("--threads", type=int, default=8)
    p_bench.add_argument("--runs", type=int, default=20)
    p_bench.add_argument("--width", type=int, default=640)
    p_bench.add_argument("--height", type=int, default=480)
    p_bench.add_argument("--out", help="also write the result as JSON")
    p_bench.set_defaults(fn=_cmd_bench)

    p_demo = sub.add_parser("demo-scene", help="generate a synthetic clickable scene")
    p_demo.add_argument("out_dir")
    p_demo.add_argument("--clusters", type=int, default=5)
    p_demo.add_argument("--points", type=int, default=2500)
    p_demo.add_argument("--views", type=int, default=8)
    p_demo.add_argument("--width", type=int, default=320)
    p_demo.add_argument("--height", type=int, default=240)
    p_demo.add_argument("--seed", type=int, default=None)
    p_demo.set_defaults(fn=_cmd_demo_scene)

    p_sweep = sub.add_parser("clicks-sweep", help="metrics vs click count")
    p_sweep.add_argument("n_list", help="comma-separated click counts, e.g. 5,10,15,20,25,30")
    p_sweep.add_argument("--dataset", required=True, help="dataset scene root")
    p_sweep.add_argument("--out", default="clicks_sweep.csv")
    _add_pipeline_flags(p_sweep)
    p_sweep.set_defaults(fn=_cmd_clicks_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
