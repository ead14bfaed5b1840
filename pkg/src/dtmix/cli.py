"""dtmix command line: EDT export, single-pair mixing, seeded batch
augmentation, benchmarking, and the embedded selfcheck.

Exit codes are stable: 0 ok, 1 selfcheck failure, 2 usage, 3 I/O,
4 infeasible thresholds, 5 degenerate input.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import RECORD_FORMAT_VERSION, __version__
from .edt import edt, edt_brute_squared, edt_squared, warmup_jit
from .errors import (
    BadHeader,
    BadLabel,
    BadMagic,
    ClassCountMismatch,
    DegenerateMix,
    DimsMismatch,
    EmptyBackground,
    EmptyForeground,
    EmptyManifest,
    InconsistentRecord,
    InfeasibleThresholds,
    InvalidVolume,
    IoFailure,
    NonFiniteData,
    ShapeMismatch,
    SpacingMismatch,
    TruncatedFile,
    UnsupportedDatatype,
    ZeroCount,
)
from .io import read_manifest, read_nifti, record_json_line, write_mix_record, write_nifti
from .mixer import MixConfig, SoftLabel, mix_pair
from .regions import Thresholds
from .rng import Xoshiro256StarStar, pair_rng
from .selfcheck import run_all
from .volume import Volume, foreground_mask

EXIT_OK = 0
EXIT_SELFCHECK = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_DEGENERATE = 5

_IO_ERRORS = (
    OSError,
    IoFailure,
    BadMagic,
    UnsupportedDatatype,
    TruncatedFile,
    NonFiniteData,
    BadHeader,
    BadLabel,
    EmptyManifest,
    InconsistentRecord,
)
_DEGENERATE_ERRORS = (
    EmptyBackground,
    EmptyForeground,
    DegenerateMix,
    ShapeMismatch,
    SpacingMismatch,
    DimsMismatch,
    ClassCountMismatch,
    InvalidVolume,
    ZeroCount,
)
# per-pair conditions a batch run skips instead of aborting
_SKIPPABLE = (InfeasibleThresholds,) + _DEGENERATE_ERRORS


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-fraction", type=float, default=0.10,
                   help="minimum per-region share of foreground voxels (default 0.10)")
    p.add_argument("--residual", choices=["strict", "fill-a"], default="strict",
                   help="residual voxels: zero (strict) or copy of input A (fill-a)")
    p.add_argument("--count-domain", choices=["all", "foreground"], default="all",
                   help="count label pixels over all voxels or foreground union")
    p.add_argument("--q1", type=float, default=1.0 / 3.0,
                   help="lower quantile for threshold selection")
    p.add_argument("--q2", type=float, default=2.0 / 3.0,
                   help="upper quantile for threshold selection")
    p.add_argument("--bg-threshold", type=float, default=0.0,
                   help="intensities <= this are background (default 0.0)")


def _config_from_args(args) -> MixConfig:
    return MixConfig(
        residual_policy=args.residual.replace("-", "_"),
        count_domain=args.count_domain,
        min_fraction=args.min_fraction,
        bg_threshold=args.bg_threshold,
        q1=args.q1,
        q2=args.q2,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtmix",
        description="Distance-transform guided mixup for 3D brain MRI volumes.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"dtmix {__version__} (mix-record format v{RECORD_FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_edt = sub.add_parser("edt", help="compute and store the distance transform")
    p_edt.add_argument("--input", required=True, help="input NIfTI volume")
    p_edt.add_argument("--output", required=True, help="output NIfTI distance field")
    p_edt.add_argument("--bg-threshold", type=float, default=0.0)
    p_edt.set_defaults(func=cmd_edt)

    p_mix = sub.add_parser("mix", help="mix one volume pair")
    p_mix.add_argument("--input-a", required=True)
    p_mix.add_argument("--input-b", required=True)
    p_mix.add_argument("--label-a", type=int, required=True)
    p_mix.add_argument("--label-b", type=int, required=True)
    p_mix.add_argument("--num-classes", type=int, default=3)
    p_mix.add_argument("--out-image", required=True)
    p_mix.add_argument("--out-record", required=True)
    p_mix.add_argument("--t1", type=float, default=None,
                       help="explicit lower threshold (mm); skips quantile selection")
    p_mix.add_argument("--t2", type=float, default=None,
                       help="explicit upper threshold (mm); skips quantile selection")
    _add_config_flags(p_mix)
    p_mix.set_defaults(func=cmd_mix)

    p_aug = sub.add_parser("augment", help="seeded batch augmentation over a manifest")
    p_aug.add_argument("--manifest", required=True, help="CSV manifest path,label[,id]")
    p_aug.add_argument("--out-dir", required=True)
    p_aug.add_argument("--seed", type=int, required=True, help="64-bit master seed")
    p_aug.add_argument("--pairs", type=int, required=True, help="number of pairs to draw")
    p_aug.add_argument("--pairing", choices=["uniform", "cross-class"], default="uniform")
    p_aug.add_argument("--workers", type=int, default=1)
    p_aug.add_argument("--num-classes", type=int, default=3)
    _add_config_flags(p_aug)
    p_aug.set_defaults(func=cmd_augment)

    p_bench = sub.add_parser("bench", help="time the distance transform")
    p_bench.add_argument("--size", default="181,217,181",
                         help="grid size nx,ny,nz (default MNI152 1mm)")
    p_bench.add_argument("--iters", type=int, default=5)
    p_bench.add_argument("--seed", type=int, default=1)
    p_bench.set_defaults(func=cmd_bench)

    p_check = sub.add_parser("selfcheck", help="run the embedded invariant suite")
    p_check.set_defaults(func=cmd_selfcheck)

    return parser


def cmd_edt(args) -> int:
    vol = read_nifti(args.input)
    fg = foreground_mask(vol, args.bg_threshold)
    field = edt(fg, vol.spacing)
    out = Volume(
        vol.dims,
        vol.spacing,
        field.values.astype(np.float32),
        id=vol.id + "_edt",
        orient=vol.orient,
    )
    write_nifti(args.output, out)
    print(f"edt: {args.input} -> {args.output} "
          f"({vol.dims[0]}x{vol.dims[1]}x{vol.dims[2]}, "
          f"max distance {field.values.max():.3f} mm)")
    return EXIT_OK


def cmd_mix(args) -> int:
    if (args.t1 is None) != (args.t2 is None):
        raise ValueError("--t1 and --t2 must be given together")
    vol_a = read_nifti(args.input_a)
    vol_b = read_nifti(args.input_b)
    cfg = _config_from_args(args)
    ya = SoftLabel.one_hot(args.label_a, args.num_classes)
    yb = SoftLabel.one_hot(args.label_b, args.num_classes)
    thresholds = None
    if args.t1 is not None:
        thresholds = Thresholds(args.t1, args.t2, cfg.q1, cfg.q2, cfg.min_fraction)
    sample = mix_pair(vol_a, ya, vol_b, yb, cfg, thresholds=thresholds)
    write_nifti(args.out_image, sample.image)
    write_mix_record(args.out_record, sample.record)
    rec = sample.record
    print(f"mix: {rec.id_a} + {rec.id_b} -> {args.out_image} "
          f"(t1={rec.t1:.4g} t2={rec.t2:.4g} alpha_a={rec.alpha_a:.4f})")
    return EXIT_OK


def _sample_pair(rng: Xoshiro256StarStar, entries, pairing: str):
    """Two distinct manifest indices; cross-class retries labels 100 times."""
    n = len(entries)
    i_a = rng.below(n)
    if pairing == "uniform":
        i_b = rng.below(n)
        while i_b == i_a:
            i_b = rng.below(n)
        return i_a, i_b
    for _ in range(100):
        i_b = rng.below(n)
        if i_b == i_a:
            continue
        if entries[i_a].label != entries[i_b].label:
            return i_a, i_b
    return None


def _augment_task(payload):
    """One batch pair, runnable in a worker process."""
    (k, path_a, label_a, id_a, path_b, label_b, id_b,
     cfg_kwargs, num_classes, seed, out_dir) = payload
    try:
        vol_a = read_nifti(path_a)
        vol_b = read_nifti(path_b)
        vol_a = Volume(vol_a.dims, vol_a.spacing, vol_a.data, id=id_a, orient=vol_a.orient)
        vol_b = Volume(vol_b.dims, vol_b.spacing, vol_b.data, id=id_b, orient=vol_b.orient)
        cfg = MixConfig(**cfg_kwargs)
        sample = mix_pair(
            vol_a,
            SoftLabel.one_hot(label_a, num_classes),
            vol_b,
            SoftLabel.one_hot(label_b, num_classes),
            cfg,
            seed=seed,
            pair_index=k,
        )
        write_nifti(os.path.join(out_dir, f"mix_{k:06d}.nii.gz"), sample.image)
        return k, "ok", record_json_line(sample.record)
    except _SKIPPABLE as exc:
        return k, "skip", f"{type(exc).__name__}: {exc}"


def cmd_augment(args) -> int:
    entries = read_manifest(args.manifest, args.num_classes)
    if len(entries) < 2:
        print("augment: manifest has a single entry, cannot form a pair of "
              "distinct entries", file=sys.stderr)
        return EXIT_USAGE
    if args.pairs < 1:
        raise ValueError("--pairs must be >= 1")
    if args.workers < 1:
        raise ValueError("--workers must be >= 1")
    cfg = _config_from_args(args)
    os.makedirs(args.out_dir, exist_ok=True)

    pairing = args.pairing.replace("-", "_")
    tasks = []
    sampling_skips = 0
    for k in range(args.pairs):
        rng = pair_rng(args.seed, k)
        drawn = _sample_pair(rng, entries, pairing)
        if drawn is None:
            print(f"augment: pair {k}: no cross-class partner after 100 draws, "
                  "skipping", file=sys.stderr)
            sampling_skips += 1
            continue
        a, b = entries[drawn[0]], entries[drawn[1]]
        tasks.append((
            k, a.path, a.label, a.id, b.path, b.label, b.id,
            cfg.__dict__.copy(), args.num_classes, args.seed, args.out_dir,
        ))

    if args.workers == 1 or len(tasks) <= 1:
        results = [_augment_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_augment_task, tasks))

    results.sort(key=lambda r: r[0])
    ok_lines = [line for _, status, line in results if status == "ok"]
    skipped = [(k, line) for k, status, line in results if status == "skip"]
    with open(os.path.join(args.out_dir, "records.jsonl"), "w", encoding="utf-8") as fh:
        for line in ok_lines:
            fh.write(line + "\n")
    for k, reason in skipped:
        print(f"augment: pair {k} skipped ({reason})", file=sys.stderr)
    print(f"augment: {args.pairs} pairs requested, {len(ok_lines)} written, "
          f"{len(skipped)} skipped, {sampling_skips} unsampleable")
    if not ok_lines:
        print("augment: no pair produced output (all infeasible or unsampleable)",
              file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _blob_mask(dims, seed: int):
    """Union of random balls: a deterministic brain-ish benchmark mask."""
    from .volume import BinaryMask

    nx, ny, nz = dims
    rng = Xoshiro256StarStar.from_seed(seed)
    radius_cap = max(2, min(dims) // 3)
    gz, gy, gx = np.meshgrid(
        np.arange(nz, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nx, dtype=np.float64),
        indexing="ij",
    )
    fg = np.zeros((nz, ny, nx), dtype=bool)
    for _ in range(6):
        cx, cy, cz = rng.below(nx), rng.below(ny), rng.below(nz)
        r = 2 + rng.below(max(1, radius_cap - 1))
        fg |= (gx - cx) ** 2 + (gy - cy) ** 2 + (gz - cz) ** 2 <= r * r
    if fg.all():
        fg[0, 0, 0] = False
    if not fg.any():
        fg[nz // 2, ny // 2, nx // 2] = True
    return BinaryMask(dims, fg.reshape(-1))


def cmd_bench(args) -> int:
    try:
        dims = tuple(int(p) for p in args.size.split(","))
    except ValueError:
        raise ValueError(f"--size must be nx,ny,nz integers, got {args.size!r}")
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"--size must be three positive integers, got {args.size!r}")
    if args.iters < 1:
        raise ValueError("--iters must be >= 1")

    mask = _blob_mask(dims, args.seed)
    nvox = dims[0] * dims[1] * dims[2]
    warmup_jit()

    print(f"bench: grid {dims[0]}x{dims[1]}x{dims[2]} ({nvox} voxels), "
          f"{int(np.count_nonzero(mask.bits))} foreground, seed {args.seed}")
    print(f"{'iter':>4}  {'wall [s]':>9}  {'Mvox/s':>8}")
    times = []
    for it in range(args.iters):
        t0 = time.perf_counter()
        edt(mask, (1.0, 1.0, 1.0))
        dt = time.perf_counter() - t0
        times.append(dt)
        print(f"{it:>4}  {dt:>9.4f}  {nvox / dt / 1e6:>8.1f}")
    best = min(times)
    print(f"best  {best:>9.4f}  {nvox / best / 1e6:>8.1f}   "
          f"(mean {sum(times) / len(times):.4f} s over {args.iters} iters)")

    if nvox <= 16 ** 3:
        fast = edt_squared(mask, (1.0, 1.0, 1.0))
        brute = edt_brute_squared(mask, (1.0, 1.0, 1.0))
        if np.array_equal(fast, brute):
            print("oracle: ok")
        else:
            print("oracle: FAIL (fast transform disagrees with brute force)")
            return EXIT_SELFCHECK
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    return EXIT_OK if run_all(print) else EXIT_SELFCHECK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handled usage/--version itself
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InfeasibleThresholds as exc:
        print(f"dtmix: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _DEGENERATE_ERRORS as exc:
        print(f"dtmix: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except _IO_ERRORS as exc:
        print(f"dtmix: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"dtmix: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
