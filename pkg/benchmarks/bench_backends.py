"""Compare the compiled and pure-Python normal kernels.

Times ``estimate_normal_map`` on synthetic street scenes for each available
backend and reports the largest normal disagreement between them.

    python benchmarks/bench_backends.py --points 20000 50000 --radius 0.2 1.0
"""

import argparse
import time

import numpy as np

from diffnormals import available_backends, estimate_normal_map
from diffnormals.synthetic import street_scene


def best_time(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, nargs="+", default=[20_000, 50_000])
    p.add_argument("--radius", type=float, nargs="+", default=[0.2, 1.0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--threads", type=int, default=0)
    args = p.parse_args(argv)

    backends = available_backends()
    print("points,radius," + ",".join(f"{b}_seconds" for b in backends) + ",speedup,max_abs_diff")
    for n in args.points:
        cloud = street_scene(n, seed=0).cloud
        for r in args.radius:
            times, maps = {}, {}
            for b in backends:
                times[b], maps[b] = best_time(
                    lambda: estimate_normal_map(cloud, r, threads=args.threads, backend=b), args.repeat
                )
            if len(backends) == 2:
                a, b = maps["compiled"], maps["python"]
                if not np.array_equal(a.valid, b.valid):
                    raise SystemExit(f"validity masks differ at n={n}, r={r}")
                diff = float(np.abs(a.normals - b.normals).max(initial=0.0))
                speedup = f"{times['python'] / times['compiled']:.2f}"
            else:
                diff, speedup = float("nan"), ""
            cells = ",".join(f"{times[b]:.4f}" for b in backends)
            print(f"{len(cloud)},{r:g},{cells},{speedup},{diff:.2e}")


if __name__ == "__main__":
    main()
