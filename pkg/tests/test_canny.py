import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from helpers import blurred_step
from oracles import convolve_naive, gaussian_direct, hysteresis_bfs
from tornmend.canny import (NONE, STRONG, WEAK, CannyParams, EdgeMap, GradientField, canny,
                            convolve, double_threshold, gaussian_kernel, gradient, hysteresis,
                            non_max_suppression)
from tornmend.errors import InvalidThresholds
from tornmend.raster import EIGHT
from scipy import ndimage

small = hnp.arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
                   elements=st.floats(0, 255))




# -- kernel and convolution -------------------------------------------------

@given(st.floats(0.3, 4.0))
def test_kernel_normalized_and_symmetric(sigma):
    k = gaussian_kernel(sigma)
    assert k.shape[0] == 2 * int(np.ceil(3 * sigma)) + 1
    assert abs(k.sum() - 1.0) <= 1e-9
    assert np.allclose(k, k[::-1, ::-1], rtol=0, atol=1e-15)
    assert np.allclose(k, k.T, rtol=0, atol=1e-15)


def test_kernel_centre_matches_direct_evaluation():
    direct, z = gaussian_direct(1.4)
    k = gaussian_kernel(1.4)
    c = k.shape[0] // 2
    assert k[c, c] == pytest.approx(1.0 / z, rel=1e-12)
    assert np.allclose(k, direct, rtol=1e-12, atol=0)


def test_identity_kernel(rng):
    img = rng.random((7, 9))
    assert np.array_equal(convolve(img, np.array([[1.0]])), img)


def test_constant_image_stays_constant():
    out = convolve(np.full((9, 9), 3.5), gaussian_kernel(1.0))
    assert np.allclose(out, 3.5, rtol=0, atol=1e-12)


def test_box_kernel_on_3x3_matches_naive():
    img = np.arange(9.0).reshape(3, 3)
    box = np.full((3, 3), 1 / 9)
    assert np.allclose(convolve(img, box), convolve_naive(img, box), atol=1e-12)


@given(small, st.sampled_from([0.5, 1.0, 1.4]))
def test_convolve_matches_naive(img, sigma):
    k = gaussian_kernel(sigma)
    assert np.allclose(convolve(img, k), convolve_naive(img, k), rtol=0, atol=1e-9)


def test_even_kernel_rejected():
    with pytest.raises(ValueError):
        convolve(np.zeros((3, 3)), np.ones((2, 2)))


# -- gradient ---------------------------------------------------------------

def test_constant_image_has_no_gradient():
    assert not gradient(np.full((6, 6), 9.0)).magnitude.any()


def test_vertical_step_sobel():
    img = np.zeros((8, 8))
    img[:, 4:] = 1.0
    g = gradient(img)
    mag = g.magnitude[2:6]
    assert set(np.argwhere(mag == mag.max())[:, 1]) == {3, 4}
    assert (g.direction[2:6, 3:5] == 0).all()
    assert g.magnitude.max() == pytest.approx(4.0)


@given(small)
def test_l1_dominates_l2(img):
    assert (gradient(img, "l1").magnitude >= gradient(img, "l2").magnitude - 1e-9).all()


# -- non-maximum suppression -----------------------------------------------

def test_single_pixel_survives():
    mag = np.zeros((5, 5))
    mag[2, 2] = 3.0
    thin = non_max_suppression(GradientField(mag, np.zeros((5, 5), np.int8)))
    assert thin[2, 2] == 3.0 and thin.sum() == 3.0


def test_ramp_keeps_only_the_peak():
    mag = np.array([[0.0, 1.0, 2.0, 3.0, 0.0]])
    thin = non_max_suppression(GradientField(mag, np.zeros_like(mag, np.int8)))
    assert thin.tolist() == [[0.0, 0.0, 0.0, 3.0, 0.0]]


def test_plateau_tie_break_keeps_one():
    mag = np.array([[0.0, 2.0, 2.0, 0.0]])
    thin = non_max_suppression(GradientField(mag, np.zeros_like(mag, np.int8)))
    assert np.count_nonzero(thin) == 1


@given(small)
def test_nms_never_increases(img):
    g = gradient(img)
    thin = non_max_suppression(g)
    assert (thin <= g.magnitude).all()
    assert not (thin[g.magnitude == 0]).any()


def test_blurred_step_thins_to_one_column():
    thin = non_max_suppression(gradient(blurred_step()))
    rows = thin[3:-3] > 1e-6
    assert (rows.sum(axis=1) == 1).all()
    assert len(set(np.argmax(rows, axis=1))) == 1


# -- thresholds and hysteresis ---------------------------------------------

def test_double_threshold_labels():
    out = double_threshold(np.array([[0.1, 0.5, 0.9, 0.7, 0.3]]), 0.3, 0.7)
    assert out.labels.tolist() == [[NONE, WEAK, STRONG, WEAK, WEAK]]


def test_all_below_low_is_empty():
    out = hysteresis(double_threshold(np.full((4, 4), 0.1), 0.3, 0.7))
    assert not out.labels.any() and not out.final.any()


@pytest.mark.parametrize("low,high", [(0.5, 0.5), (0.0, 1.0), (0.8, 0.2)])
def test_invalid_thresholds(low, high):
    with pytest.raises(InvalidThresholds):
        double_threshold(np.zeros((2, 2)), low, high)
    with pytest.raises(InvalidThresholds):
        CannyParams(low=low, high=high)


def test_weak_chain_touching_strong_is_kept():
    labels = np.zeros((5, 7), np.uint8)
    labels[2, 1:6] = WEAK
    labels[2, 6] = STRONG
    labels[0, 0] = WEAK  # isolated
    final = hysteresis(EdgeMap(labels)).final
    assert final[2, 1:7].all()
    assert not final[0, 0]


def test_isolated_weak_blob_removed():
    labels = np.zeros((6, 6), np.uint8)
    labels[1:3, 1:3] = WEAK
    assert not hysteresis(EdgeMap(labels)).final.any()


def test_hysteresis_matches_bfs_oracle():
    rng = np.random.default_rng(42)
    for _ in range(100):
        labels = rng.choice([NONE, WEAK, STRONG], size=(32, 32), p=[0.45, 0.45, 0.1]).astype(np.uint8)
        assert np.array_equal(hysteresis(EdgeMap(labels)).final, hysteresis_bfs(labels))


@given(hnp.arrays(np.uint8, (10, 10), elements=st.sampled_from([NONE, WEAK, STRONG])))
def test_hysteresis_is_a_fixed_point(labels):
    once = hysteresis(EdgeMap(labels)).final
    relabeled = np.where(once, STRONG, NONE).astype(np.uint8)
    assert np.array_equal(hysteresis(EdgeMap(relabeled)).final, once)
    assert not (once & (labels == NONE)).any()


# -- the full detector -----------------------------------------------------

def test_blank_image_has_no_edges():
    assert canny(np.full((20, 20), 128.0)).edge_pixels() == 0


def test_step_edge_is_single_connected_line():
    img = np.zeros((32, 32))
    img[:, 16:] = 255.0
    final = canny(img).final
    core = final[4:-4]
    assert (core.sum(axis=1) == 1).all()
    _, count = ndimage.label(final, structure=EIGHT)
    assert count == 1


def test_l1_and_l2_agree_on_noiseless_step():
    img = np.zeros((24, 24))
    img[:, 11:] = 200.0
    a = canny(img, CannyParams(norm="l2", low=20, high=60)).final
    b = canny(img, CannyParams(norm="l1", low=20, high=60)).final
    assert np.array_equal(a, b)


def test_canny_is_the_stage_composition(rng):
    img = rng.random((24, 24)) * 255
    p = CannyParams(low=30.0, high=90.0)
    smoothed = convolve(img, gaussian_kernel(p.sigma))
    manual = hysteresis(double_threshold(non_max_suppression(gradient(smoothed)), 30.0, 90.0))
    out = canny(img, p)
    assert np.array_equal(out.final, manual.final)
    assert np.array_equal(out.labels, manual.labels)


def test_lowering_low_never_removes_edges():
    rng = np.random.default_rng(8)
    for _ in range(50):
        img = ndimage.gaussian_filter(rng.random((32, 32)) * 255, 1.0)
        thin = non_max_suppression(gradient(convolve(img, gaussian_kernel(1.4))))
        high = float(np.quantile(thin[thin > 0], 0.8))
        lows = sorted(rng.uniform(0.05, 0.95, 3) * high)
        prev = None
        for low in reversed(lows):
            final = hysteresis(double_threshold(thin, low, high)).final
            if prev is not None:
                assert not (prev & ~final).any()
            prev = final
