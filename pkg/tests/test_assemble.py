import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from helpers import fragment, sides_of
from oracles import bbox_brute
from tornmend.assemble import (BlendParams, Canvas, Rect, blend, bounding_box, place,
                               signed_seam_distance, stitch)
from tornmend.config import Config
from tornmend.errors import EmptyMask, PlacementOutOfRange
from tornmend.matching import MatchParams, Placement, select_pair
from tornmend.raster import GrayImage, Polyline

NO_REPAIR = Config().with_overrides(repair={"enabled": False})


def two_layer_canvas(value_a, value_b, width=24, height=12, seam_x=12.0, overlap=5):
    """A on the left, B on the right, overlapping around a vertical seam
    that runs upward (the direction A's torn side is traced)."""
    cols = np.arange(width)[None, :].repeat(height, axis=0)
    alpha_a = (cols <= seam_x + overlap).astype(float)
    alpha_b = (cols >= seam_x - overlap).astype(float)
    layer_a = np.full((height, width), value_a, np.uint8)
    layer_b = np.full((height, width), value_b, np.uint8)
    seam = Polyline(np.column_stack([np.full(height, seam_x), np.arange(height - 1, -1, -1.0)]))
    hard = np.where(alpha_b > 0, layer_b, layer_a)
    return Canvas(GrayImage(hard), alpha_a, alpha_b, seam, layer_a, layer_b)


# -- bounding boxes --------------------------------------------------------

def test_single_pixel_box():
    bits = np.zeros((8, 8), bool)
    bits[4, 3] = True
    assert bounding_box(bits) == Rect(4, 4, 3, 3)


def test_full_mask_box():
    assert bounding_box(np.ones((5, 7), bool)) == Rect(0, 4, 0, 6)


def test_two_blobs_box():
    bits = np.zeros((12, 12), bool)
    bits[2, 2] = bits[7, 10] = True
    assert bounding_box(bits) == Rect(2, 7, 2, 10)


def test_empty_box():
    with pytest.raises(EmptyMask):
        bounding_box(np.zeros((3, 3), bool))
    with pytest.raises(ValueError):
        Rect(3, 2, 0, 0)


@given(hnp.arrays(bool, st.tuples(st.integers(1, 20), st.integers(1, 20))))
def test_box_matches_brute_scan(bits):
    if not bits.any():
        return
    r = bounding_box(bits)
    assert (r.first_row, r.last_row, r.first_col, r.last_col) == bbox_brute(bits)


# -- placement -------------------------------------------------------------

def test_truth_placement_restores_page_size(displaced_pair):
    _, pair = displaced_pair
    fa, fb = fragment(pair.a, "A"), fragment(pair.b, "B")
    canvas = place(fa, fb, pair.truth.placement)
    h, w = canvas.image.height, canvas.image.width
    slack = pair.truth.gap_width + 4
    assert abs(w - 800) <= slack and abs(h - 600) <= slack


def test_zero_translation_on_itself_is_box_plus_margin(straight_pair):
    _, pair = straight_pair
    fa = fragment(pair.a, "A")
    canvas = place(fa, fa, Placement(0, (0, 0)))
    r = bounding_box(fa.mask)
    assert (canvas.image.height, canvas.image.width) == (r.height + 4, r.width + 4)


def test_far_placement_is_out_of_range(straight_pair):
    _, pair = straight_pair
    fa = fragment(pair.a, "A")
    with pytest.raises(PlacementOutOfRange):
        place(fa, fa, Placement(0, (10_000, 0)))


def test_overlap_stays_near_the_seam(straight_pair):
    _, pair = straight_pair
    sa, sb = sides_of(pair.a, "A"), sides_of(pair.b, "B")
    m = select_pair(sa, sb)
    a = next(s for s in sa if s.side_index == m.side_a)
    b = next(s for s in sb if s.side_index == m.side_b)
    canvas = place(fragment(pair.a, "A"), fragment(pair.b, "B"), m.placement, a, b, smooth=2.0)
    rows, cols = np.nonzero((canvas.alpha_a > 0) & (canvas.alpha_b > 0))
    if rows.size:
        # seam ends are clipped by resampling, so measure along the tear only
        body = (rows > 8) & (rows < canvas.image.height - 8)
        assert (np.abs(signed_seam_distance(canvas, rows[body], cols[body])) <= 2.0).all()
    # once placed, the matched chains sit within a pixel of the expected separation
    assert abs(m.mean - MatchParams().separation) <= 1.0


def test_canvas_coverage_is_complete(displaced_pair):
    _, pair = displaced_pair
    canvas = place(fragment(pair.a, "A"), fragment(pair.b, "B"), pair.truth.placement)
    covered = (canvas.alpha_a > 0) | (canvas.alpha_b > 0) | canvas.gap_mask
    assert covered.all()


# -- blending --------------------------------------------------------------

def test_hard_composite_lets_b_win():
    canvas = two_layer_canvas(10, 200)
    out = blend(canvas, BlendParams(0.0)).pixels
    assert (out[:, 7:18] == 200).all()
    assert (out[:, :7] == 10).all()


def test_equal_sides_stay_constant():
    out = blend(two_layer_canvas(90, 90), BlendParams(4.0)).pixels
    assert (out == 90).all()


def test_ramp_is_monotone_across_the_band():
    out = blend(two_layer_canvas(0, 255), BlendParams(4.0)).pixels.astype(int)
    for row in out:
        assert (np.diff(row) >= 0).all()
    assert out[0, 12 - 5] == 0 and out[0, 12 + 5] == 255
    assert 0 < out[0, 12] < 255


@given(st.integers(0, 255), st.integers(0, 255), st.floats(0.0, 6.0))
def test_blend_is_convex(va, vb, w):
    out = blend(two_layer_canvas(va, vb), BlendParams(w)).pixels
    lo, hi = min(va, vb), max(va, vb)
    assert ((out >= lo) & (out <= hi)).all()


def test_uncovered_pixels_are_white():
    canvas = two_layer_canvas(0, 0, overlap=-3)
    out = blend(canvas, BlendParams(2.0)).pixels
    assert (out[canvas.gap_mask] == 255).all()
    assert canvas.gap_mask.any()


def test_feather_must_be_non_negative():
    with pytest.raises(ValueError):
        BlendParams(-1.0)


# -- the pipeline ----------------------------------------------------------

def test_same_fragment_twice_is_not_a_match(straight_pair):
    _, pair = straight_pair
    res = stitch(pair.a, pair.a, NO_REPAIR)
    assert not res.accepted
    assert res.image is None
    assert res.report["candidates"]


def test_cross_document_pair_is_rejected_with_candidates(straight_pair, flipped_pair):
    res = stitch(straight_pair[1].a, flipped_pair[1].b, NO_REPAIR)
    assert not res.accepted
    assert res.report["accepted"] is False
    assert all("variance" in row for row in res.report["candidates"])


def test_stitch_is_deterministic(displaced_pair):
    _, pair = displaced_pair
    one = stitch(pair.a, pair.b)
    two = stitch(pair.a, pair.b)
    assert one.accepted
    assert one.image == two.image
    assert one.report == two.report
    assert np.array_equal(one.gap_mask, two.gap_mask)
