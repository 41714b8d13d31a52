"""Command-line pipeline: generate, render, label, baseline, eval, loss.

Exit codes: 0 success, 1 I/O or data errors, 2 usage errors (argparse).
Every command is deterministic given its flags and seed; outputs are written
atomically. When --seed is omitted, the TCOW_SEED environment variable is
consulted before falling back to 0.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import baselines, formats, label, losses, metrics, render
from .generate import (
    ContainerScriptConfig,
    RandomClutterConfig,
    gen_container_script,
    gen_random_clutter,
)
from .render import FrameMasks
from .scene import load_scene, save_scene

SEED_ENV_VAR = "TCOW_SEED"


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    return int(os.environ.get(SEED_ENV_VAR, "0"))


def _print_config(args: argparse.Namespace, config) -> None:
    if args.print_config:
        print(json.dumps(dataclasses.asdict(config) | {"seed": args.seed}, indent=1))


def _load_masks(masks_dir: str) -> list[FrameMasks]:
    kind_v, visible = formats.load_tcmask(os.path.join(masks_dir, "visible.tcmask"))
    kind_x, xray = formats.load_tcmask(os.path.join(masks_dir, "xray.tcmask"))
    if kind_v != formats.KIND_VISIBLE or kind_x != formats.KIND_XRAY:
        raise ValueError(f"{masks_dir}: unexpected mask kinds {kind_v}/{kind_x}")
    if visible.shape[0] != xray.shape[0]:
        raise ValueError(f"{masks_dir}: visible and xray frame counts differ")
    return [
        FrameMasks(visible=visible[t], xray=xray[t], frame_index=t)
        for t in range(visible.shape[0])
    ]


def _triplet_planes(pred_or_gt) -> np.ndarray:
    return np.stack([pred_or_gt.m_t, pred_or_gt.m_o, pred_or_gt.m_c], axis=1)


def _save_triplet(path: str, triplet_like) -> None:
    formats.save_planes(path, _triplet_planes(triplet_like), kind=formats.KIND_TRIPLET)


def _load_triplet_arrays(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kind, planes = formats.load_tcmask(path)
    if kind != formats.KIND_TRIPLET or planes.shape[1] != 3:
        raise ValueError(f"{path}: not a triplet mask file")
    return planes[:, 0], planes[:, 1], planes[:, 2]


def cmd_generate(args: argparse.Namespace) -> int:
    if args.containers > args.static:
        args.parser.error("--containers cannot exceed --static")
    args.seed = _resolve_seed(args.seed)
    if args.kind == "container-script":
        config = ContainerScriptConfig(
            frame_count=args.frames,
            fps=args.fps,
            width=args.width,
            height=args.height,
            pusher_speed=args.pusher_speed,
            container_size_multiplier=args.container_size_mult,
        )
        scene = gen_container_script(config, seed=args.seed)
    else:
        config = RandomClutterConfig(
            static_count=args.static,
            dynamic_count=args.dynamic,
            containers=args.containers,
            frame_count=args.frames,
            fps=args.fps,
            width=args.width,
            height=args.height,
        )
        scene = gen_random_clutter(config, seed=args.seed)
    _print_config(args, config)
    save_scene(args.out, scene)
    print(
        f"wrote {args.out}: K={scene.instance_count} T={scene.frame_count} seed={args.seed}"
    )
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    scene = load_scene(args.scene)
    os.makedirs(args.out_dir, exist_ok=True)
    all_masks = render.rasterize_scene(scene, jobs=args.jobs)
    visible = np.stack([m.visible for m in all_masks])
    xray = np.stack([m.xray for m in all_masks])
    formats.save_visible_grid(
        os.path.join(args.out_dir, "visible.tcmask"), visible, scene.instance_count
    )
    formats.save_planes(os.path.join(args.out_dir, "xray.tcmask"), xray, kind=formats.KIND_XRAY)
    if args.cartoon:
        for masks in all_masks:
            frame = render.render_cartoon(masks, palette_seed=args.palette_seed)
            formats.write_ppm(
                os.path.join(args.out_dir, f"cartoon_{masks.frame_index:04d}.ppm"), frame
            )
    print(f"rendered {scene.frame_count} frames to {args.out_dir}")
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    args.seed = _resolve_seed(args.seed)
    scene = load_scene(args.scene)
    all_masks = _load_masks(args.masks_dir)
    triplet, frame_labels, events = label.annotate(
        scene, all_masks, args.target, samples=args.samples, seed=args.seed, jobs=args.jobs
    )
    records = label.target_records(frame_labels, args.target)
    label.save_annotation(args.out + ".json", triplet, records, events)
    _save_triplet(args.out + ".tcmask", triplet)
    print(
        f"target {args.target}: {events.containment_events} containment event(s), "
        f"{events.occlusion_events} occlusion event(s)"
    )
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    all_masks = _load_masks(args.masks_dir)
    gt, records, _ = label.load_annotation(args.annotation)
    if args.method == "copy-query":
        masks0 = all_masks[0]
        query = render.query_mask(masks0, gt.target_id)
        pred = baselines.copy_query(query, len(all_masks))
    else:
        frame_labels = label.occlusion_labels_from_masks(all_masks)
        if args.method == "static-mask":
            pred = baselines.static_mask(gt, frame_labels)
        elif args.method == "linear-extrapolation":
            pred = baselines.linear_extrapolation(gt, frame_labels)
        else:
            pred = baselines.jump_to_occluder(gt, frame_labels, all_masks)
    _save_triplet(args.out + ".tcmask", pred)
    formats.atomic_write_json(
        args.out + ".manifest.json",
        {
            "method": args.method,
            "parameters": {
                "target_id": gt.target_id,
                "annotation": os.path.basename(args.annotation),
                "occlusion_threshold": label.OCCLUSION_THRESHOLD,
            },
        },
    )
    print(f"wrote {args.out}.tcmask ({args.method})")
    return 0


def _score_one(pred_path: str, gt_path: str, labels_path: str, threshold: float):
    m_t, m_o, m_c = _load_triplet_arrays(pred_path)
    pred = baselines.PredictionTriplet(m_t=m_t, m_o=m_o, m_c=m_c)
    gt, records, _ = label.load_annotation(labels_path)
    gt_t, gt_o, gt_c = _load_triplet_arrays(gt_path)
    gt = label.AnnotationTriplet(target_id=gt.target_id, m_t=gt_t, m_o=gt_o, m_c=gt_c)
    return metrics.score_video(pred, gt, records, threshold=threshold)


def cmd_eval(args: argparse.Namespace) -> int:
    if not (len(args.pred) == len(args.gt) == len(args.labels)):
        raise ValueError("--pred, --gt and --labels must be given the same number of times")
    reports = [
        _score_one(p, g, l, args.threshold)
        for p, g, l in zip(args.pred, args.gt, args.labels)
    ]
    rows = [(os.path.basename(p), r) for p, r in zip(args.pred, reports)]
    out = {"videos": [r.to_json() for r in reports]}
    if len(reports) > 1:
        agg = metrics.aggregate(reports)
        rows.append(("aggregate", agg))
        out["aggregate"] = agg.to_json()
    print(metrics.format_table(rows))
    if args.out:
        formats.atomic_write_json(args.out, out)
    return 0


def cmd_loss(args: argparse.Namespace) -> int:
    config = losses.LossConfig.load(args.config) if args.config else losses.LossConfig()
    m_t, m_o, m_c = _load_triplet_arrays(args.pred)
    pred = baselines.PredictionTriplet(m_t=m_t, m_o=m_o, m_c=m_c)
    gt, records, _ = label.load_annotation(args.labels)
    gt_t, gt_o, gt_c = _load_triplet_arrays(args.gt)
    gt = label.AnnotationTriplet(target_id=gt.target_id, m_t=gt_t, m_o=gt_o, m_c=gt_c)
    breakdown = losses.loss_breakdown(pred, gt, records, config)
    print(json.dumps(breakdown, indent=1))
    if args.out:
        formats.atomic_write_json(args.out, breakdown)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tcmask",
        description="Scripted-scene ground truth and evaluation for occlusion/containment tracking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a scene file for a scripted scenario")
    p_gen.add_argument("kind", choices=["container-script", "random-clutter"])
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--frames", type=int, default=36)
    p_gen.add_argument("--fps", type=float, default=12.0)
    p_gen.add_argument("--width", type=int, default=480)
    p_gen.add_argument("--height", type=int, default=360)
    p_gen.add_argument("--pusher-speed", type=float, default=1.7)
    p_gen.add_argument("--container-size-mult", type=float, default=1.5)
    p_gen.add_argument("--static", type=int, default=4)
    p_gen.add_argument("--dynamic", type=int, default=2)
    p_gen.add_argument("--containers", type=int, default=0)
    p_gen.add_argument("--print-config", action="store_true")
    p_gen.set_defaults(func=cmd_generate, parser=p_gen)

    p_render = sub.add_parser("render", help="rasterize a scene into mask files")
    p_render.add_argument("--scene", required=True)
    p_render.add_argument("--out-dir", required=True)
    p_render.add_argument("--cartoon", action="store_true", help="also write flat-color PPM frames")
    p_render.add_argument("--palette-seed", type=int, default=0)
    p_render.add_argument("--jobs", type=int, default=1)
    p_render.set_defaults(func=cmd_render)

    p_label = sub.add_parser("label", help="compute ground-truth annotation for a target")
    p_label.add_argument("--scene", required=True)
    p_label.add_argument("--masks-dir", required=True)
    p_label.add_argument("--target", type=int, required=True)
    p_label.add_argument("--out", required=True, help="output prefix (.json and .tcmask)")
    p_label.add_argument("--samples", type=int, default=label.DEFAULT_SAMPLES)
    p_label.add_argument("--seed", type=int, default=None)
    p_label.add_argument("--jobs", type=int, default=1)
    p_label.set_defaults(func=cmd_label)

    p_base = sub.add_parser("baseline", help="run a heuristic tracker")
    p_base.add_argument("--method", required=True, choices=sorted(baselines.METHODS))
    p_base.add_argument("--masks-dir", required=True)
    p_base.add_argument("--annotation", required=True, help="ground-truth annotation .json")
    p_base.add_argument("--out", required=True, help="output prefix")
    p_base.set_defaults(func=cmd_baseline)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--pred", action="append", required=True)
    p_eval.add_argument("--gt", action="append", required=True)
    p_eval.add_argument("--labels", action="append", required=True)
    p_eval.add_argument("--threshold", type=float, default=metrics.DEFAULT_THRESHOLD)
    p_eval.add_argument("--out")
    p_eval.set_defaults(func=cmd_eval)

    p_loss = sub.add_parser("loss", help="evaluate the training objective on a prediction")
    p_loss.add_argument("--pred", required=True)
    p_loss.add_argument("--gt", required=True)
    p_loss.add_argument("--labels", required=True)
    p_loss.add_argument("--config", help="LossConfig JSON file")
    p_loss.add_argument("--out")
    p_loss.set_defaults(func=cmd_loss)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
