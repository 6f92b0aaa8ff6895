"""Text orientation: skew from projection profiles, deskew, flip candidates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import NoText
from .raster import BinaryMask, Fragment, GrayImage, binarize, rotate_array


@dataclass(frozen=True)
class OrientParams:
    sweep: float = 45.0
    coarse_step: float = 0.5
    fine_step: float = 0.1
    min_ink: float = 0.01  # ink fraction of the paper region
    min_skew: float = 1.0  # smaller estimates are left alone
    assume_upright: bool = False

    def __post_init__(self):
        if not 0 < self.sweep <= 45:
            raise ValueError("sweep must lie in (0, 45]")
        if not (self.coarse_step > 0 and self.fine_step > 0):
            raise ValueError("sweep steps must be positive")
        if not 0 <= self.min_ink < 1:
            raise ValueError("min_ink must lie in [0, 1)")


@dataclass(frozen=True)
class OrientationEstimate:
    skew_degrees: float
    flip_candidates: tuple = (0, 180)
    confidence: float = 0.0

    def __post_init__(self):
        if not self.flip_candidates:
            raise ValueError("flip_candidates must not be empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")


def ink_points(img: GrayImage, mask: BinaryMask) -> tuple[np.ndarray, int]:
    """(x, y) of dark pixels well inside the paper, and the paper area."""
    paper = ndimage.binary_fill_holes(mask.bits)
    paper = ndimage.binary_erosion(paper, iterations=3)
    t = binarize(img).threshold
    ink = paper & (img.pixels < t)
    ys, xs = np.nonzero(ink)
    return np.column_stack([xs, ys]).astype(np.float64), int(paper.sum())


def profile_variance(points: np.ndarray, degrees: float) -> float:
    """Variance of the row histogram after undoing a ``degrees`` rotation."""
    th = math.radians(degrees)
    y = math.sin(th) * points[:, 0] + math.cos(th) * points[:, 1]
    bins = np.floor(y - y.min()).astype(np.int64)
    return float(np.bincount(bins).var())


def _sweep(points, angles):
    return np.array([profile_variance(points, a) for a in angles])


def estimate_orientation(img: GrayImage, mask: BinaryMask,
                         params: OrientParams = OrientParams()) -> OrientationEstimate:
    pts, area = ink_points(img, mask)
    if area == 0 or len(pts) < max(1.0, params.min_ink * area):
        raise NoText(f"{len(pts)} ink pixels in a paper area of {area}")
    n = int(round(params.sweep / params.coarse_step))
    coarse = np.arange(-n, n + 1) * params.coarse_step
    cv = _sweep(pts, coarse)
    k = int(np.argmax(cv))
    m = int(round(params.coarse_step / params.fine_step))
    fine = coarse[k] + np.arange(-m, m + 1) * params.fine_step
    fine = fine[np.abs(fine) <= params.sweep + 1e-9]
    fv = _sweep(pts, fine)
    j = int(np.argmax(fv))
    vmax = max(float(fv[j]), float(cv[k]))
    conf = 0.0 if vmax <= 0 else (vmax - float(cv.mean())) / vmax
    skew = round(float(fine[j]), 6)
    flips = (0,) if params.assume_upright else (0, 180)
    return OrientationEstimate(skew, flips, min(1.0, max(0.0, conf)))


def estimate_skew(img: GrayImage, mask: BinaryMask, params: OrientParams = OrientParams()) -> float:
    """Counter-clockwise (as displayed) text skew in degrees."""
    return estimate_orientation(img, mask, params).skew_degrees


def rotate_fragment(frag: Fragment, degrees: float) -> Fragment:
    """Rotate image (bilinear) and mask (nearest) on a grown canvas; new
    canvas area takes the median background intensity."""
    pix = frag.image.pixels
    outside = pix[~frag.mask.bits]
    fill = float(np.median(outside)) if outside.size else 0.0
    img, _ = rotate_array(pix, degrees, order=1, fill=fill)
    bits, _ = rotate_array(frag.mask.bits.astype(np.float64), degrees, order=0, fill=0.0)
    return Fragment(GrayImage(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)),
                    BinaryMask(bits > 0.5), frag.fragment_id, frag.rotation + degrees)


def normalize_fragment(frag: Fragment, params: OrientParams = OrientParams()):
    try:
        est = estimate_orientation(frag.image, frag.mask, params)
    except NoText:
        return frag, OrientationEstimate(0.0, (0, 180), 0.0)
    if abs(est.skew_degrees) >= params.min_skew:
        frag = rotate_fragment(frag, -est.skew_degrees)
    return frag, est


def normalize_pair(frag_a: Fragment, frag_b: Fragment, params: OrientParams = OrientParams()):
    """Deskew both fragments; return them with the flip candidates to try.

    The 180° ambiguity is left to the matcher.  A fragment without enough
    text is left as is and widens the candidates to both rotations.
    """
    a, est_a = normalize_fragment(frag_a, params)
    b, est_b = normalize_fragment(frag_b, params)
    flips = tuple(sorted(set(est_a.flip_candidates) | set(est_b.flip_candidates)))
    return a, b, flips, (est_a, est_b)
