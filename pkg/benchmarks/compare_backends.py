#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the three hot paths (triangle fill, Monte Carlo containment counting,
occlusion statistics) plus the end-to-end render+label pipeline under both
backends and prints a timing table. The backend is chosen per process, so
this script re-invokes itself with TCMASK_BACKEND set.

Usage: python benchmarks/compare_backends.py [--repeats N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def measure(repeats: int) -> dict:
    import numpy as np

    from tcmask import kernels
    from tcmask._backend import backend_name
    from tcmask.generate import RandomClutterConfig, gen_random_clutter
    from tcmask.label import annotate
    from tcmask.render import rasterize_scene

    gen = np.random.Generator(np.random.Philox(0))

    def best(fn):
        times = []
        for _ in range(repeats):
            start = time.perf_counter()
            fn()
            times.append(time.perf_counter() - start)
        return min(times)

    # triangle fill: a screenful of random triangles at 480x360
    xy = gen.uniform([-50, -50], [520, 400], size=(400, 3, 2))
    invz = gen.uniform(0.05, 2.0, size=(400, 3))
    ids = gen.integers(1, 12, size=400).astype(np.uint16)

    def run_fill():
        zbuf = np.zeros((360, 480))
        idbuf = np.zeros((360, 480), dtype=np.uint16)
        kernels.fill_visible(xy, invz, ids, zbuf, idbuf)

    # containment counting: 100k points through an affine map
    pts = gen.uniform(-1, 1, size=(100_000, 3))
    rot = np.eye(3)
    trans = np.array([0.2, -0.1, 0.3])
    he = np.array([0.8, 0.9, 0.7])

    def run_count():
        kernels.count_points_in_box(pts, rot, trans, he)

    # occlusion statistics on a 480x360 12-instance frame
    visible = gen.integers(0, 13, size=(360, 480)).astype(np.uint16)
    xray = gen.random((12, 360, 480)) > 0.6

    def run_stats():
        kernels.occlusion_stats(visible, xray)

    # end-to-end: generate + render + label one 12-object scene
    cfg = RandomClutterConfig(static_count=8, dynamic_count=4, containers=2, width=480, height=360)

    def run_pipeline():
        scene = gen_random_clutter(cfg, seed=11)
        masks = rasterize_scene(scene)
        annotate(scene, masks, 1, samples=100_000, seed=0)

    run_fill(), run_count(), run_stats(), run_pipeline()  # warm up / JIT compile
    return {
        "backend": backend_name(),
        "fill_visible_400tris_480x360": best(run_fill),
        "count_points_100k": best(run_count),
        "occlusion_stats_12x480x360": best(run_stats),
        "pipeline_12obj_36f_480x360": best(run_pipeline),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(measure(args.repeats)))
        return 0

    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, TCMASK_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker", "--repeats", str(args.repeats)],
            capture_output=True,
            text=True,
            env=env,
        )
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            return 1
        results[backend] = json.loads(proc.stdout.strip().splitlines()[-1])

    keys = [k for k in results["numba"] if k != "backend"]
    width = max(len(k) for k in keys)
    print(f"{'kernel'.ljust(width)}  {'numba':>10}  {'numpy':>10}  {'ratio':>7}")
    for key in keys:
        a, b = results["numba"][key], results["numpy"][key]
        print(f"{key.ljust(width)}  {a * 1e3:>8.2f}ms  {b * 1e3:>8.2f}ms  {b / a:>6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
