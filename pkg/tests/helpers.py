"""Shared fixtures and independent oracle implementations.

Everything here recomputes results with deliberately naive code (pure
Python loops, literal formulas) so production modules are checked against
a second, independent route.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from dtmix import BinaryMask, MixConfig, SoftLabel, Volume
from dtmix.edt import edt_brute_squared


def flat_index(i, j, k, dims):
    nx, ny, nz = dims
    return i + nx * (j + ny * k)


def make_volume(dims, values, spacing=(1.0, 1.0, 1.0), vid="test"):
    return Volume(dims, spacing, np.asarray(values, dtype=np.float32), id=vid)


def cube_volume(n=20, lo=5, hi=15, vid="cube"):
    """Solid axis-aligned cube of nonzero intensities in an n^3 zero grid."""
    data = np.zeros((n, n, n), np.float32)  # (z, y, x)
    for k in range(lo, hi):
        for j in range(lo, hi):
            for i in range(lo, hi):
                data[k, j, i] = 1.0 + 0.001 * flat_index(i, j, k, (n, n, n))
    return Volume((n, n, n), (1.0, 1.0, 1.0), data.reshape(-1), id=vid)


def ball_volume(n=20, radius=6.0, vid="ball"):
    """Solid ball centred in an n^3 zero grid."""
    c = (n - 1) / 2.0
    data = np.zeros((n, n, n), np.float32)
    for k in range(n):
        for j in range(n):
            for i in range(n):
                if (i - c) ** 2 + (j - c) ** 2 + (k - c) ** 2 <= radius * radius:
                    data[k, j, i] = 2.0 + 0.001 * flat_index(i, j, k, (n, n, n))
    return Volume((n, n, n), (1.0, 1.0, 1.0), data.reshape(-1), id=vid)


def random_mask(rng, dims, density=None) -> BinaryMask:
    n = dims[0] * dims[1] * dims[2]
    if density is None:
        density = rng.uniform(0.15, 0.85)
    bits = rng.random(n) < density
    if bits.all():
        bits[rng.integers(0, n)] = False
    return BinaryMask(dims, bits)


# ---------------------------------------------------------------------------
# independent region/mix oracle: per-voxel elif chain and literal arithmetic


def oracle_region_codes(da_vals, db_vals, t1, t2):
    """0 = residual, 1..4 = regions, evaluated voxel by voxel."""
    codes = np.zeros(len(da_vals), dtype=np.int8)
    for p in range(len(da_vals)):
        if da_vals[p] <= t1:
            codes[p] = 1
        elif t1 < db_vals[p] <= t2:
            codes[p] = 2
        elif t1 < da_vals[p] <= t2:
            codes[p] = 3
        elif db_vals[p] > t2:
            codes[p] = 4
    return codes


def oracle_nearest_rank(q, n):
    prod = q * n
    nearest = round(prod)
    if abs(prod - nearest) <= 4.0 * np.spacing(prod):
        rank = int(nearest)
    else:
        rank = math.ceil(prod)
    return min(max(rank, 1), n)


def oracle_select_thresholds(da_vals, db_vals, fga, fgb, min_fraction, q1, q2):
    """Replays quantile selection with sorted() and explicit loops.

    Returns (t1, t2) or None when no candidate reaches the floor.
    """
    union = int(np.count_nonzero(fga | fgb))
    pool = sorted([float(v) for v in da_vals[fga]] + [float(v) for v in db_vals[fgb]])
    n = len(pool)

    def cuts(qa, qb):
        return pool[oracle_nearest_rank(qa, n) - 1], pool[oracle_nearest_rank(qb, n) - 1]

    def min_region(t1, t2):
        codes = oracle_region_codes(da_vals, db_vals, t1, t2)
        return min(int((codes == r).sum()) for r in (1, 2, 3, 4))

    floor = min_fraction * union
    t1, t2 = cuts(q1, q2)
    if min_region(t1, t2) >= floor:
        return t1, t2
    best = None
    for qa in [k / 10 for k in range(1, 10)]:
        for qb in [k / 10 for k in range(1, 10)]:
            if qa >= qb:
                continue
            ta, tb = cuts(qa, qb)
            score = min_region(ta, tb)
            if best is None or score > best[0]:
                best = (score, ta, tb)
    if best[0] >= floor:
        return best[1], best[2]
    return None


def oracle_mix(xa, ya, xb, yb, cfg: MixConfig, thresholds=None):
    """Full brute-force pipeline replay.

    edt_brute for the transforms, elif-chain region codes, per-voxel image
    assembly, literal pixel-count label arithmetic. Returns a dict or
    raises the same way the production path should.
    """
    fga = np.asarray(xa.data) > np.float32(cfg.bg_threshold)
    fgb = np.asarray(xb.data) > np.float32(cfg.bg_threshold)
    da = np.sqrt(edt_brute_squared(BinaryMask(xa.dims, fga), xa.spacing))
    db = np.sqrt(edt_brute_squared(BinaryMask(xb.dims, fgb), xa.spacing))
    if thresholds is None:
        cut = oracle_select_thresholds(da, db, fga, fgb, cfg.min_fraction, cfg.q1, cfg.q2)
        if cut is None:
            return None
        t1, t2 = cut
    else:
        t1, t2 = thresholds
    codes = oracle_region_codes(da, db, t1, t2)

    image = np.zeros(xa.nvox, dtype=np.float32)
    for p in range(xa.nvox):
        if codes[p] in (1, 3):
            image[p] = xa.data[p]
        elif codes[p] in (2, 4):
            image[p] = xb.data[p]
        elif cfg.residual_policy == "fill_a":
            image[p] = xa.data[p]

    counts = tuple(int((codes == r).sum()) for r in (1, 2, 3, 4, 0))
    if cfg.count_domain == "all":
        p_a = counts[0] + counts[2]
        p_b = counts[1] + counts[3]
    else:
        fg_union = fga | fgb
        p_a = int((((codes == 1) | (codes == 3)) & fg_union).sum())
        p_b = int((((codes == 2) | (codes == 4)) & fg_union).sum())
    if p_a + p_b == 0:
        return None
    alpha_a = p_a / (p_a + p_b)
    alpha_b = p_b / (p_a + p_b)
    label = alpha_a * np.asarray(ya.probs) + alpha_b * np.asarray(yb.probs)
    return {
        "t1": t1,
        "t2": t2,
        "counts": counts,
        "p_a": p_a,
        "p_b": p_b,
        "alpha_a": alpha_a,
        "alpha_b": alpha_b,
        "label": label,
        "image": image,
    }


# ---------------------------------------------------------------------------
# hand-built NIfTI-1 fixtures (field offsets straight from the format spec)


def build_nifti_bytes(dims, spacing, payload, dtype_code=16, bo="<",
                      scl_slope=0.0, scl_inter=0.0, vox_offset=352,
                      magic=b"n+1\x00", ndim=3, extra_dims=()):
    nx, ny, nz = dims
    hdr = bytearray(348)
    struct.pack_into(bo + "i", hdr, 0, 348)
    dim_field = [ndim, nx, ny, nz, 1, 1, 1, 1]
    for idx, d in enumerate(extra_dims, start=4):
        dim_field[idx] = d
    struct.pack_into(bo + "8h", hdr, 40, *dim_field)
    bitpix = {2: 8, 4: 16, 8: 32, 16: 32, 64: 64}.get(dtype_code, 32)
    struct.pack_into(bo + "2h", hdr, 70, dtype_code, bitpix)
    struct.pack_into(bo + "8f", hdr, 76, 1.0, spacing[0], spacing[1], spacing[2],
                     0.0, 0.0, 0.0, 0.0)
    struct.pack_into(bo + "f", hdr, 108, float(vox_offset))
    struct.pack_into(bo + "2f", hdr, 112, scl_slope, scl_inter)
    struct.pack_into("<4s", hdr, 344, magic)
    body = bytes(hdr)
    body += b"\x00" * (vox_offset - len(body))
    body += payload
    return body


def label_vec(values):
    return SoftLabel(np.asarray(values, dtype=np.float64))
