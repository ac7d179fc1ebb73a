"""Compare the compiled kernels with their pure-Python fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from mdnlab import _pykernels
from mdnlab.minicover import collect_episodes

try:
    from mdnlab import _ckernels
except ImportError:
    _ckernels = None


def cases():
    frames = np.concatenate([ep.float_frames() for ep in collect_episodes(4, 300, 99)])[:400]
    masks = [(f > 0.85).astype(np.uint8) for f in frames]
    scores = np.arange(2, 2 * 41, 2, dtype=np.int64)  # doubled ranks of 40 distinct values
    return {
        "label_regions x400 frames": lambda k: [k.label_regions(m) for m in masks],
        "subset_sum_counts n=20 of 40": lambda k: k.subset_sum_counts(scores, 20),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'case':32s} " + " ".join(f"{name:>12s}" for name, _ in backends) + "   speedup")
    for label, fn in cases().items():
        times = [min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        speed = f"{times[0] / times[1]:8.1f}x" if len(times) > 1 else "     n/a"
        print(f"{label:32s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + "  " + speed)


if __name__ == "__main__":
    main()
