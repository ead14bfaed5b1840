"""Embedded invariant suite behind the ``selfcheck`` CLI command.

Each group re-derives expected results through an independent route
(brute-force transform, per-voxel rule re-evaluation, finite differences)
and compares against the production path.
"""

from __future__ import annotations

import numpy as np

from .edt import DistanceField, edt_brute_squared, edt_squared
from .loss import ClassWeights, soft_ce_grad_logits, soft_cross_entropy, softmax
from .mixer import SoftLabel, mix_labels
from .regions import Thresholds, build_region_masks
from .volume import BinaryMask


def _random_mask(rng, dims) -> BinaryMask:
    nx, ny, nz = dims
    bits = rng.random(nx * ny * nz) < rng.uniform(0.2, 0.8)
    if bits.all():
        bits[rng.integers(0, bits.size)] = False
    return BinaryMask(dims, bits)


def _random_field(rng, dims) -> DistanceField:
    n = dims[0] * dims[1] * dims[2]
    values = rng.uniform(0.0, 5.0, n)
    values[rng.integers(0, n)] = 0.0
    return DistanceField(dims, (1.0, 1.0, 1.0), values)


def check_edt_oracle() -> None:
    rng = np.random.default_rng(0xD7)
    for trial in range(12):
        dims = tuple(int(d) for d in rng.integers(8, 17, size=3))
        fg = _random_mask(rng, dims)
        if not fg.bits.any():
            continue
        fast = edt_squared(fg, (1.0, 1.0, 1.0))
        brute = edt_brute_squared(fg, (1.0, 1.0, 1.0))
        assert np.array_equal(fast, brute), f"EDT mismatch on {dims} trial {trial}"
    # anisotropic spot check
    fg = _random_mask(rng, (8, 8, 8))
    spacing = (1.0, 1.25, 2.0)
    fast = edt_squared(fg, spacing)
    brute = edt_brute_squared(fg, spacing)
    assert np.allclose(fast, brute, rtol=1e-6, atol=0.0), "anisotropic EDT mismatch"


def _direct_region_codes(da, db, t1, t2) -> np.ndarray:
    # independent per-voxel elif-chain; 1..4 are regions, 0 is residual
    codes = np.zeros(da.size, dtype=np.int8)
    for p in range(da.size):
        if da[p] <= t1:
            codes[p] = 1
        elif t1 < db[p] <= t2:
            codes[p] = 2
        elif t1 < da[p] <= t2:
            codes[p] = 3
        elif db[p] > t2:
            codes[p] = 4
        else:
            codes[p] = 0
    return codes


def check_region_partition() -> None:
    rng = np.random.default_rng(0xA5)
    for _ in range(30):
        dims = tuple(int(d) for d in rng.integers(2, 7, size=3))
        da = _random_field(rng, dims)
        db = _random_field(rng, dims)
        cuts = np.sort(rng.uniform(0.1, 4.0, size=2))
        t = Thresholds(float(cuts[0]), float(cuts[1]), 1 / 3, 2 / 3, 0.10)
        masks = build_region_masks(da, db, t)
        stacked = np.stack(
            [m.bits for m in (masks.r1, masks.r2, masks.r3, masks.r4, masks.residual)]
        )
        assert (stacked.sum(axis=0) == 1).all(), "not an exact partition"
        codes = _direct_region_codes(da.values, db.values, t.t1, t.t2)
        for region, mask in enumerate(
            (masks.residual, masks.r1, masks.r2, masks.r3, masks.r4)
        ):
            assert np.array_equal(mask.bits, codes == region), "direct re-eval differs"
        closed = (da.values > t.t2) & (db.values <= t.t1)
        assert np.array_equal(masks.residual.bits, closed), "residual closed form"


def check_alpha_conservation() -> None:
    rng = np.random.default_rng(0x77)
    for _ in range(50):
        dims = (4, 4, 4)
        da = _random_field(rng, dims)
        db = _random_field(rng, dims)
        t = Thresholds(1.0, 2.5, 1 / 3, 2 / 3, 0.10)
        masks = build_region_masks(da, db, t)
        c = int(rng.integers(2, 5))
        pa = rng.dirichlet(np.ones(c))
        pb = rng.dirichlet(np.ones(c))
        try:
            label, p_a, p_b, alpha_a, alpha_b = mix_labels(
                SoftLabel(pa), SoftLabel(pb), masks
            )
        except Exception as exc:  # DegenerateMix is impossible here
            raise AssertionError(f"mix_labels failed: {exc}")
        assert abs(alpha_a + alpha_b - 1.0) <= 1e-12
        assert abs(float(label.probs.sum()) - 1.0) <= 1e-9
        lo = np.minimum(pa, pb) - 1e-12
        hi = np.maximum(pa, pb) + 1e-12
        assert ((label.probs >= lo) & (label.probs <= hi)).all()


def check_loss_gradient() -> None:
    rng = np.random.default_rng(0x3C)
    step = 1e-5
    for _ in range(40):
        c = int(rng.integers(2, 6))
        z = rng.normal(0.0, 2.0, c)
        y = SoftLabel(rng.dirichlet(np.ones(c)))
        w = ClassWeights(rng.uniform(0.2, 3.0, c))
        grad = soft_ce_grad_logits(z, y, w)
        for k in range(c):
            zp, zm = z.copy(), z.copy()
            zp[k] += step
            zm[k] -= step
            fd = (
                soft_cross_entropy(softmax(zp), y, w)
                - soft_cross_entropy(softmax(zm), y, w)
            ) / (2 * step)
            denom = max(abs(fd), abs(grad[k]), 1e-8)
            assert abs(grad[k] - fd) / denom < 1e-4, "gradient check failed"
        assert abs(float(grad.sum())) <= 1e-12, "gradient does not sum to zero"


GROUPS = {
    "edt_oracle": check_edt_oracle,
    "region_partition": check_region_partition,
    "alpha_conservation": check_alpha_conservation,
    "loss_gradient": check_loss_gradient,
}


def run_all(emit=print) -> bool:
    ok = True
    for name, check in GROUPS.items():
        try:
            check()
        except AssertionError as exc:
            emit(f"{name}: FAIL ({exc})")
            ok = False
        else:
            emit(f"{name}: ok")
    return ok
