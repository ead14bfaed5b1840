#!/usr/bin/env python3
"""Sweep grid sizes and report distance-transform throughput."""

import argparse
import time

from dtmix.cli import _blob_mask
from dtmix.edt import edt, warmup_jit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="64,128,181,256",
                    help="comma list of cubic grid edges (181 runs 181x217x181)")
    ap.add_argument("--iters", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    warmup_jit()
    print(f"{'grid':>14} {'voxels':>10} {'best [s]':>9} {'Mvox/s':>8}")
    for edge in (int(s) for s in args.sizes.split(",")):
        dims = (181, 217, 181) if edge == 181 else (edge, edge, edge)
        mask = _blob_mask(dims, args.seed)
        nvox = dims[0] * dims[1] * dims[2]
        best = min(
            _timed(lambda: edt(mask, (1.0, 1.0, 1.0))) for _ in range(args.iters)
        )
        label = "x".join(str(d) for d in dims)
        print(f"{label:>14} {nvox:>10} {best:>9.4f} {nvox / best / 1e6:>8.1f}")


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


if __name__ == "__main__":
    main()
