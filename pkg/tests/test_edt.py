import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtmix import BinaryMask, EmptyBackground, edt, edt_brute
from dtmix.edt import DistanceField, edt_brute_squared, edt_squared

from helpers import random_mask


def mask_from_bits(dims, bits):
    return BinaryMask(dims, np.asarray(bits, dtype=bool))


def test_line_distances():
    fg = mask_from_bits((1, 1, 4), [1, 0, 1, 1])
    for fn in (edt, edt_brute):
        assert fn(fg, (1, 1, 1)).values.tolist() == [1.0, 0.0, 1.0, 2.0]


def test_single_background_corner():
    bits = np.ones(27, bool)
    bits[0] = False
    fg = mask_from_bits((3, 3, 3), bits)
    for fn in (edt, edt_brute):
        d = fn(fg, (1, 1, 1))
        assert d.values[-1] == pytest.approx(np.sqrt(12.0), abs=1e-6)
        assert d.values[0] == 0.0


def test_anisotropic_step():
    fg = mask_from_bits((1, 1, 2), [0, 1])
    for fn in (edt, edt_brute):
        assert fn(fg, (1, 1, 2)).values.tolist() == [0.0, 2.0]


def test_empty_background_rejected():
    fg = mask_from_bits((2, 2, 2), np.ones(8, bool))
    with pytest.raises(EmptyBackground):
        edt(fg, (1, 1, 1))
    with pytest.raises(EmptyBackground):
        edt_brute(fg, (1, 1, 1))


def test_all_background_is_zero_field():
    fg = mask_from_bits((3, 2, 2), np.zeros(12, bool))
    assert not edt(fg, (1, 1, 1)).values.any()


def test_matches_brute_on_random_unit_grids():
    rng = np.random.default_rng(101)
    for _ in range(40):
        dims = tuple(int(d) for d in rng.integers(1, 17, 3))
        fg = random_mask(rng, dims)
        fast = edt_squared(fg, (1.0, 1.0, 1.0))
        brute = edt_brute_squared(fg, (1.0, 1.0, 1.0))
        assert np.array_equal(fast, brute), f"mismatch on {dims}"


def test_matches_brute_anisotropic():
    rng = np.random.default_rng(202)
    spacing = (1.0, 1.25, 2.0)
    for _ in range(10):
        fg = random_mask(rng, (8, 8, 8))
        fast = edt_squared(fg, spacing)
        brute = edt_brute_squared(fg, spacing)
        assert np.allclose(fast, brute, rtol=1e-6, atol=0.0)


def test_deterministic_repeat():
    rng = np.random.default_rng(33)
    fg = random_mask(rng, (9, 7, 5))
    a = edt(fg, (1.0, 1.25, 0.7)).values
    b = edt(fg, (1.0, 1.25, 0.7)).values
    assert a.tobytes() == b.tobytes()


def test_distance_field_requires_zero():
    with pytest.raises(EmptyBackground):
        DistanceField((1, 1, 3), (1, 1, 1), np.array([1.0, 2.0, 3.0]))


@st.composite
def masks(draw):
    nx = draw(st.integers(1, 8))
    ny = draw(st.integers(1, 8))
    nz = draw(st.integers(1, 8))
    n = nx * ny * nz
    bits = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    bits = np.asarray(bits, dtype=bool)
    if bits.all():
        bits[0] = False
    return BinaryMask((nx, ny, nz), bits)


@given(masks())
@settings(max_examples=50, deadline=None)
def test_zero_set_is_background(fg):
    d = edt(fg, (1.0, 1.0, 1.0))
    assert np.array_equal(d.values == 0.0, ~fg.bits)


@given(masks())
@settings(max_examples=50, deadline=None)
def test_lipschitz_along_axes(fg):
    spacing = (1.0, 1.5, 0.75)
    d3 = edt(fg, spacing).as_3d()  # indexed [k, j, i]
    steps = {2: spacing[0], 1: spacing[1], 0: spacing[2]}
    for axis, h in steps.items():
        diffs = np.abs(np.diff(d3, axis=axis))
        assert (diffs <= h + 1e-9).all()


@given(masks(), st.randoms(use_true_random=False))
@settings(max_examples=50, deadline=None)
def test_monotone_under_background_growth(fg, pyrng):
    d_before = edt(fg, (1.0, 1.0, 1.0)).values
    bits = fg.bits.copy()
    fg_idx = np.flatnonzero(bits)
    if fg_idx.size == 0:
        return
    drop = pyrng.sample(list(fg_idx), k=max(1, fg_idx.size // 4))
    bits[drop] = False
    d_after = edt(BinaryMask(fg.dims, bits), (1.0, 1.0, 1.0)).values
    assert (d_after <= d_before + 1e-12).all()
