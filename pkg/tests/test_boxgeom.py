import numpy as np
import pytest
from hypothesis import given, strategies as st

from embtrack.boxgeom import BoundingBox, iou, iou_matrix, truncated_iou

coord = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
size = st.floats(0.0, 500.0, allow_nan=False, allow_infinity=False)


@st.composite
def boxes(draw, min_size=0.0):
    x, y = draw(coord), draw(coord)
    w = draw(st.floats(min_size, 500.0, allow_nan=False))
    h = draw(st.floats(min_size, 500.0, allow_nan=False))
    return BoundingBox(x, y, x + w, y + h)


def test_identity():
    b = BoundingBox(3.0, 4.0, 10.0, 20.0)
    assert iou(b, b) == 1.0


def test_disjoint():
    assert iou(BoundingBox(0, 0, 1, 1), BoundingBox(5, 5, 6, 6)) == 0.0


def test_half_overlap_is_one_third():
    # intersection 2, union 4 + 4 - 2 = 6
    assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 0, 3, 2)) == pytest.approx(1 / 3, abs=1e-15)


def test_touching_edges_do_not_overlap():
    assert iou(BoundingBox(0, 0, 1, 1), BoundingBox(1, 0, 2, 1)) == 0.0


def test_degenerate_boxes_give_zero():
    p = BoundingBox(1, 1, 1, 1)
    assert iou(p, p) == 0.0
    assert iou(p, BoundingBox(0, 0, 2, 2)) == 0.0


def test_invalid_corners_rejected():
    with pytest.raises(ValueError):
        BoundingBox(2, 0, 1, 1)


@pytest.mark.parametrize(
    "other, floor, expected",
    [
        # 10x10 box vs 10xw box sharing the left edge: IOU = w / 10
        (BoundingBox(0, 0, 3.9, 10), 0.4, 0.0),
        (BoundingBox(0, 0, 10, 10), 0.4, 1.0),
        (BoundingBox(0, 0, 4, 10), 0.4, 0.4),
    ],
)
def test_truncation(other, floor, expected):
    ref = BoundingBox(0, 0, 10, 10)
    assert truncated_iou(ref, other, floor) == pytest.approx(expected, abs=1e-15)


def test_truncation_boundary_is_inclusive():
    ref = BoundingBox(0, 0, 10, 10)
    other = BoundingBox(0, 0, 4, 10)
    v = iou(ref, other)
    assert truncated_iou(ref, other, v) == v


def test_truncation_floor_range():
    with pytest.raises(ValueError):
        truncated_iou(BoundingBox(0, 0, 1, 1), BoundingBox(0, 0, 1, 1), 1.5)


@given(boxes(), boxes())
def test_symmetric(a, b):
    assert iou(a, b) == iou(b, a)


@given(boxes(), boxes())
def test_range_and_truncation_zero(a, b):
    v = iou(a, b)
    assert 0.0 <= v <= 1.0
    assert truncated_iou(a, b, 0.0) == v


small = st.integers(0, 6)


@given(small, small, small, small, small, small, small, small)
def test_unit_iou_means_equal(x0, y0, w0, h0, x1, y1, w1, h1):
    # integer corners keep the arithmetic exact
    a = BoundingBox(x0, y0, x0 + w0 + 1, y0 + h0 + 1)
    b = BoundingBox(x1, y1, x1 + w1 + 1, y1 + h1 + 1)
    assert (iou(a, b) == 1.0) == (a == b)


@given(
    boxes(min_size=1.0),
    boxes(min_size=1.0),
    st.integers(-64, 64),
    st.integers(-64, 64),
)
def test_translation_invariance(a, b, dx, dy):
    # integer-valued shift of dyadic coordinates keeps arithmetic exact
    a = BoundingBox(*(round(v) for v in a.as_tuple()))
    b = BoundingBox(*(round(v) for v in b.as_tuple()))
    assert iou(a.shifted(dx, dy), b.shifted(dx, dy)) == iou(a, b)


def test_matrix_agrees_with_scalar():
    rng = np.random.default_rng(0)
    xy = rng.uniform(0, 50, size=(30, 2))
    wh = rng.uniform(0, 30, size=(30, 2))
    arr = np.concatenate([xy, xy + wh], axis=1)
    m = iou_matrix(arr[:12], arr[12:])
    for i in range(12):
        for j in range(18):
            assert m[i, j] == iou(BoundingBox(*arr[i]), BoundingBox(*arr[12 + j]))


def test_matrix_empty_shapes():
    assert iou_matrix(np.zeros((0, 4)), np.zeros((3, 4))).shape == (0, 3)
