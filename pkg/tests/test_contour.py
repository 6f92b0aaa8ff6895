import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp
from scipy import ndimage

from helpers import chain_distance, random_polyline
from oracles import boundary_pixels_brute, dp_recursive, self_intersects
from tornmend.contour import (SimplifyParams, extract_boundaries, point_segment_distance,
                              points_in_polygon, simplify_dp,
                              simplify_indices, split_sides, trace_boundary)
from tornmend.errors import DegenerateBoundary, EmptyBoundary, EmptyMask
from tornmend.harness import TearSpec, pair_from_spec
from tornmend.raster import Fragment, Polyline

polylines = hnp.arrays(np.float64, st.integers(2, 40).map(lambda n: (n, 2)),
                       elements=st.integers(0, 30).map(float))




def distinct(arr):
    keep = np.ones(len(arr), bool)
    keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
    return arr[keep]




def blob(seed, size=16):
    rng = np.random.default_rng(seed)
    bits = ndimage.gaussian_filter(rng.random((size, size)), 1.5) > 0.5
    bits = ndimage.binary_fill_holes(bits)
    labels, n = ndimage.label(bits, structure=np.ones((3, 3)))
    if n == 0:
        return None
    sizes = ndimage.sum(bits, labels, range(1, n + 1))
    return labels == 1 + int(np.argmax(sizes))


def rectangle_boundary(w=40, h=30, x0=5, y0=5):
    bits = np.zeros((h + 2 * y0, w + 2 * x0), bool)
    bits[y0:y0 + h, x0:x0 + w] = True
    return bits


def harness_fragments(count):
    kinds = ("straight", "polyline")
    for i in range(count // 2):
        spec = TearSpec(tear_kind=kinds[i % 2], teeth=3 + i % 3, amplitude=8.0 + i % 12,
                        gap_width=float(i % 4), noise_sigma=float(i % 9), flip_b=bool(i % 2),
                        seed=300 + i)
        _, pair = pair_from_spec(spec)
        yield Fragment.from_image(pair.a, "A")
        yield Fragment.from_image(pair.b, "B")


# -- tracing ---------------------------------------------------------------

def test_three_by_three_perimeter_counter_clockwise():
    bits = np.ones((3, 3), bool)
    pts = trace_boundary(bits).points.tolist()
    assert pts == [[0, 0], [0, 1], [0, 2], [1, 2], [2, 2], [2, 1], [2, 0], [1, 0]]


def test_tiny_component_is_empty_boundary():
    bits = np.zeros((8, 8), bool)
    bits[4, 3] = True
    with pytest.raises(EmptyBoundary):
        trace_boundary(bits)
    with pytest.raises(EmptyMask):
        trace_boundary(np.zeros((4, 4), bool))


def test_trace_starts_top_left():
    bits = np.zeros((10, 10), bool)
    bits[3:8, 2:9] = True
    bits[2, 5:7] = True
    assert trace_boundary(bits).points[0].tolist() == [5, 2]


def test_trace_matches_brute_boundary_scan():
    checked = 0
    for seed in range(200):
        bits = blob(seed)
        if bits is None or bits.sum() < 4:
            continue
        got = {(int(y), int(x)) for x, y in trace_boundary(bits).points}
        assert got == boundary_pixels_brute(bits), seed
        checked += 1
    assert checked >= 100


def test_trace_is_counter_clockwise_on_screen():
    pts = trace_boundary(rectangle_boundary()).points
    x, y = pts[:, 0], pts[:, 1]
    # shoelace in (x, y-down) coordinates: counter-clockwise on screen is negative
    assert 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y) < 0


# -- point/segment distance ------------------------------------------------

@pytest.mark.parametrize("p,expect", [((1, 0), 0.0), ((1, 1), 1.0), ((5, 1), math.sqrt(10))])
def test_point_segment_distance(p, expect):
    assert point_segment_distance(p, (0, 0), (2, 0)) == pytest.approx(expect)


def test_degenerate_segment_is_point_distance():
    assert point_segment_distance((3, 4), (0, 0), (0, 0)) == pytest.approx(5.0)


# -- Douglas-Peucker -------------------------------------------------------

def test_two_points_unchanged():
    line = Polyline([[0, 0], [5, 3]])
    assert simplify_dp(line, SimplifyParams(0.1)) == line


def test_collinear_collapse():
    line = Polyline([[0, 0], [1, 0], [2, 0], [3, 0]])
    assert simplify_dp(line, SimplifyParams(0.1)).points.tolist() == [[0, 0], [3, 0]]


def test_deviation_equal_to_tolerance_drops():
    line = Polyline([[0, 0], [1, 1], [2, 0]])
    assert len(simplify_dp(line, SimplifyParams(0.5))) == 3
    assert simplify_dp(line, SimplifyParams(1.0)).points.tolist() == [[0, 0], [2, 0]]


def test_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        SimplifyParams(0.0)


def test_dp_matches_recursive_reference():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        pts = random_polyline(rng, int(rng.integers(2, 60)))
        tol = float(rng.choice([0.5, 1.0, 1.5, 2.0, 3.0]))
        assert simplify_indices(Polyline(pts), tol) == dp_recursive(pts, tol)


def test_removed_vertices_within_tolerance():
    rng = np.random.default_rng(100)
    for _ in range(1000):
        pts = random_polyline(rng, int(rng.integers(3, 60)))
        tol = float(rng.uniform(0.3, 4.0))
        out = simplify_dp(Polyline(pts), tol).points
        assert (chain_distance(pts, out) <= tol + 1e-9).all()


@given(polylines, st.floats(0.2, 5.0))
def test_dp_is_idempotent_subsequence(arr, tol):
    pts = distinct(arr)
    if len(pts) < 2:
        return
    once = simplify_dp(Polyline(pts), tol)
    assert simplify_dp(once, tol) == once
    assert once.points[0].tolist() == pts[0].tolist()
    assert once.points[-1].tolist() == pts[-1].tolist()
    idx = simplify_indices(Polyline(pts), tol)
    assert idx == sorted(set(idx))


def test_closed_line_keeps_farthest_pair():
    square = Polyline(np.array([[0, 0], [0, 5], [0, 10], [5, 10], [10, 10], [10, 5], [10, 0],
                                [5, 0]], float), closed=True)
    out = simplify_dp(square, 0.5)
    assert out.closed
    assert sorted(map(tuple, out.points.tolist())) == [(0, 0), (0, 10), (10, 0), (10, 10)]


# -- sides -----------------------------------------------------------------

def test_rectangle_has_four_uniform_sides():
    sides = split_sides(trace_boundary(rectangle_boundary()), SimplifyParams(1.5))
    assert len(sides) == 4
    assert all(s.classification == "uniform" for s in sides)


def test_sawtooth_side_is_the_only_torn_one():
    bits = rectangle_boundary(w=80, h=120, x0=20, y0=10)
    # teeth of height 10 cut into the right side
    for y in range(10, 130):
        depth = int(round(10 * abs(((y - 10) % 20) - 10) / 10))
        bits[y, 100 - depth:100] = False
    sides = split_sides(trace_boundary(bits), SimplifyParams(2.0))
    kinds = sorted(s.classification for s in sides)
    assert kinds == ["non-uniform", "uniform", "uniform", "uniform"]


def test_sides_reconstitute_boundary():
    for seed in (1, 2, 3):
        _, pair = pair_from_spec(TearSpec(tear_kind="polyline", amplitude=15.0, seed=seed))
        frag = Fragment.from_image(pair.a)
        boundary = trace_boundary(frag.mask)
        sides = split_sides(boundary)
        for s, t in zip(sides, sides[1:] + sides[:1]):
            assert s.chain.points[-1].tolist() == t.chain.points[0].tolist()
        joined = np.vstack([s.chain.points[:-1] for s in sides])
        start = sides[0].start
        assert np.array_equal(joined, np.roll(boundary.points, -start, axis=0))


def test_degenerate_boundary():
    with pytest.raises(DegenerateBoundary):
        split_sides(Polyline([[0, 0], [1, 0], [1, 1]], closed=True))


def test_harness_fragments_have_a_torn_side():
    for frag in harness_fragments(20):
        sides = split_sides(trace_boundary(frag.mask))
        assert any(s.torn for s in sides)


# -- boundary sets ---------------------------------------------------------

def test_clean_fragment_has_no_inner_boundary(straight_pair):
    _, pair = straight_pair
    frag = Fragment.from_image(pair.a)
    bset = extract_boundaries(frag.image, frag.mask)
    assert bset.inner is None
    assert bset.working is bset.outer


def test_rim_gives_inner_boundary_inside_outer():
    _, pair = pair_from_spec(TearSpec(rim=True, seed=21))
    frag = Fragment.from_image(pair.a)
    bset = extract_boundaries(frag.image, frag.mask)
    assert bset.inner is not None
    assert points_in_polygon(bset.inner.points, bset.outer).all()
    assert bset.working is bset.inner


def test_boundaries_never_self_intersect():
    for frag in harness_fragments(100):
        bset = extract_boundaries(frag.image, frag.mask)
        assert not self_intersects(bset.outer.points)
