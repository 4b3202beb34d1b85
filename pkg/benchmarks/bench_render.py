"""Compare the compiled mask-rendering kernel against the numpy fallback.

Run:  python3 benchmarks/bench_render.py [--frames 50]

Renders the same sequence of vehicle poses around the bundled hairpin track
with both backends, checks the outputs are identical, and reports per-frame
timings.
"""

from __future__ import annotations

import argparse
import statistics
import time
from pathlib import Path

import numpy as np

from trackday import percept
from trackday._render_py import classify_pixels as kernel_py
from trackday.sim import VehicleState
from trackday.track import load_track

try:
    from trackday._render_c import classify_pixels as kernel_c
except ImportError:
    kernel_c = None

DATA = Path(__file__).resolve().parent.parent / "src" / "trackday" / "data"


def poses(track, n):
    for k in range(n):
        s = k * track.total_length / n
        p = track.point_at(s)
        yield VehicleState(position=(float(p[0]), float(p[1])), heading=track.heading_at(s))


def bench(kernel, track, camera, n_frames):
    # route render_mask through one specific kernel
    old = percept._render_kernel
    percept._render_kernel = kernel
    try:
        times, masks = [], []
        for state in poses(track, n_frames):
            t0 = time.perf_counter()
            masks.append(percept.render_mask(state, track, camera))
            times.append(time.perf_counter() - t0)
        return times, masks
    finally:
        percept._render_kernel = old


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=50)
    args = parser.parse_args()

    track = load_track(DATA / "hairpin.json")
    camera = percept.CameraModel()
    percept.render_mask(poses(track, 1).__next__(), track, camera)  # warm the grid cache

    t_py, m_py = bench(None, track, camera, args.frames)
    print(f"numpy fallback : {statistics.mean(t_py) * 1e3:8.2f} ms/frame "
          f"(median {statistics.median(t_py) * 1e3:.2f} ms, {args.frames} frames)")

    if kernel_c is None:
        print("compiled kernel: not built (install with Cython to compare)")
        return

    t_c, m_c = bench(kernel_c, track, camera, args.frames)
    print(f"compiled kernel: {statistics.mean(t_c) * 1e3:8.2f} ms/frame "
          f"(median {statistics.median(t_c) * 1e3:.2f} ms, {args.frames} frames)")

    identical = all(np.array_equal(a, b) for a, b in zip(m_py, m_c))
    print(f"outputs identical: {identical}")
    print(f"speedup: {statistics.mean(t_py) / statistics.mean(t_c):.1f}x")
    if not identical:
        raise SystemExit("backend outputs differ")


if __name__ == "__main__":
    main()
