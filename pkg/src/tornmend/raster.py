"""Raster and geometry value types plus binarization.

Images are stored as read-only 8-bit arrays indexed ``[row, col]``; points
use ``(x, y)`` = ``(col, row)``.  Numeric stages work on a unit-scale float
copy (``GrayImage.unit()``) and come back through ``GrayImage.from_unit``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import EmptyMask


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def quantize(unit: np.ndarray) -> np.ndarray:
    """Map unit-scale values to uint8, rounding half away from zero."""
    scaled = np.clip(np.asarray(unit, dtype=np.float64), 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


class GrayImage:
    """Immutable 8-bit grayscale raster."""

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"GrayImage needs a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.any(arr < 0) or np.any(arr > 255):
                raise ValueError("intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "pixels", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("GrayImage is immutable")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of the intensities."""
        return self.pixels.ravel()

    def unit(self) -> np.ndarray:
        return self.pixels.astype(np.float64) / 255.0

    @classmethod
    def from_unit(cls, unit) -> "GrayImage":
        return cls(quantize(unit))

    @classmethod
    def blank(cls, width: int, height: int, value: int = 255) -> "GrayImage":
        return cls(np.full((height, width), value, dtype=np.uint8))

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


class BinaryMask:
    """Immutable foreground mask; ``bits[r, c]`` is True for foreground."""

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = np.asarray(bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError("BinaryMask needs a 2-D array")
        object.__setattr__(self, "bits", _frozen(arr))

    def __setattr__(self, name, value):
        raise AttributeError("BinaryMask is immutable")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.bits.shape, np.packbits(self.bits).tobytes()))

    def __repr__(self):
        return f"BinaryMask({self.width}x{self.height}, fg={self.count()})"


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered chain of points, stored as an ``(n, 2)`` float array of (x, y)."""

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if len(pts) < 2:
            raise ValueError("a polyline needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("polyline coordinates must be finite")
        if np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise ValueError("consecutive polyline points must differ")
        if self.closed and np.all(pts[0] == pts[-1]):
            raise ValueError("closed polylines must not repeat the first point")
        object.__setattr__(self, "points", _frozen(pts))

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, Polyline):
            return NotImplemented
        return self.closed == other.closed and np.array_equal(self.points, other.points)

    def segments(self):
        """Segment start/end arrays, including the closing segment if closed."""
        pts = self.points
        ends = np.roll(pts, -1, axis=0) if self.closed else pts[1:]
        starts = pts if self.closed else pts[:-1]
        return starts, ends

    def length(self) -> float:
        a, b = self.segments()
        return float(np.sqrt(((b - a) ** 2).sum(axis=1)).sum())


class Binarized(NamedTuple):
    mask: BinaryMask
    threshold: int
    degenerate: bool


def otsu_threshold(hist) -> tuple[int, bool]:
    """Exhaustive Otsu over all 256 thresholds, foreground = value >= t.

    Between-class variance is compared as exact rationals so ties resolve to
    the smallest threshold without floating-point noise.  Returns
    ``(threshold, degenerate)``; a histogram with a single occupied bin is
    degenerate and gets the mid-scale threshold 128.
    """
    hist = [int(h) for h in hist]
    if sum(1 for h in hist if h) <= 1:
        return 128, True
    total_n = sum(hist)
    total_s = sum(i * h for i, h in enumerate(hist))
    best_t, best = 0, Fraction(-1)
    n0 = s0 = 0
    for t in range(256):
        # class 0 = values < t
        if t > 0:
            n0 += hist[t - 1]
            s0 += (t - 1) * hist[t - 1]
        n1 = total_n - n0
        if n0 == 0 or n1 == 0:
            score = Fraction(0)
        else:
            s1 = total_s - s0
            score = Fraction((n1 * s0 - n0 * s1) ** 2, n0 * n1)
        if score > best:
            best, best_t = score, t
    return best_t, False


def binarize(img: GrayImage, method: str = "otsu", threshold: int | None = None,
             invert: bool = False) -> Binarized:
    """Foreground = pixels >= threshold (or < threshold when ``invert``)."""
    degenerate = False
    if method == "otsu":
        hist = np.bincount(img.pixels.ravel(), minlength=256)
        t, degenerate = otsu_threshold(hist)
    elif method == "fixed":
        if threshold is None:
            raise ValueError("fixed binarization needs a threshold")
        t = int(threshold)
    else:
        raise ValueError(f"unknown binarization method {method!r}")
    bits = img.pixels >= t
    if invert:
        bits = ~bits
    return Binarized(BinaryMask(bits), t, degenerate)


EIGHT = np.ones((3, 3), dtype=bool)


def largest_component(bits: np.ndarray) -> np.ndarray:
    """Largest 8-connected component; ties go to the first in scan order."""
    labels, n = ndimage.label(bits, structure=EIGHT)
    if n == 0:
        raise EmptyMask("mask has no foreground pixels")
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def closing(bits: np.ndarray, radius: float) -> np.ndarray:
    """Binary closing with a Euclidean disk, computed with distance
    transforms; the image border does not erode the result."""
    r = float(radius)
    pad = int(np.ceil(r)) + 1
    padded = np.pad(np.asarray(bits, dtype=bool), pad)
    grown = ndimage.distance_transform_edt(~padded) <= r
    closed = ndimage.distance_transform_edt(grown) > r
    return closed[pad:-pad, pad:-pad]


def silhouette(mask: BinaryMask, close_radius: float = 10.0) -> BinaryMask:
    """Paper silhouette: largest component with ink holes filled and the
    notches left by ink touching the paper edge closed."""
    bits = largest_component(mask.bits)
    bits = ndimage.binary_fill_holes(bits)
    if close_radius > 0:
        bits = ndimage.binary_fill_holes(closing(bits, close_radius) | bits)
        bits = largest_component(bits)
    return BinaryMask(bits)


def rotate_array(arr: np.ndarray, degrees: float, order: int, fill: float):
    """Rotate content counter-clockwise (as displayed) by ``degrees``.

    The canvas grows to hold the whole rotated input.  Returns the rotated
    array and the 2x3 matrix mapping input (x, y) to output (x, y).
    """
    h, w = arr.shape
    th = np.deg2rad(degrees)
    c, s = np.cos(th), np.sin(th)
    # displayed CCW rotation with y pointing down
    rot = np.array([[c, s], [-s, c]])
    corners = np.array([[0, 0], [w - 1, 0], [0, h - 1], [w - 1, h - 1]], dtype=float)
    rc = corners @ rot.T
    lo = np.floor(rc.min(axis=0) + 1e-9)
    hi = np.ceil(rc.max(axis=0) - 1e-9)
    out_w, out_h = int(hi[0] - lo[0]) + 1, int(hi[1] - lo[1]) + 1
    fwd = np.hstack([rot, -lo[:, None]])
    # ndimage works in (row, col); invert the forward map there
    inv = np.linalg.inv(rot)
    m_rc = np.array([[inv[1, 1], inv[1, 0]], [inv[0, 1], inv[0, 0]]])
    off_xy = inv @ lo
    offset = np.array([off_xy[1], off_xy[0]])
    out = ndimage.affine_transform(arr.astype(np.float64), m_rc, offset=offset,
                                   output_shape=(out_h, out_w), order=order,
                                   mode="constant", cval=fill, prefilter=False)
    return out, fwd


def apply_affine(points: np.ndarray, mat: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return pts @ mat[:, :2].T + mat[:, 2]


@dataclass(frozen=True, eq=False)
class Fragment:
    """One scanned piece: intensities, paper silhouette, and the rotation
    (degrees, counter-clockwise as displayed) already applied to it."""

    image: GrayImage
    mask: BinaryMask
    fragment_id: str = ""
    rotation: float = 0.0

    def __post_init__(self):
        if (self.mask.width, self.mask.height) != (self.image.width, self.image.height):
            raise ValueError("mask and image dimensions differ")

    @property
    def pivot(self) -> tuple:
        """Canvas centre, the pivot for 180° placements."""
        return ((self.image.width - 1) / 2.0, (self.image.height - 1) / 2.0)

    @property
    def extent(self) -> tuple:
        return (self.image.width, self.image.height)

    @classmethod
    def from_image(cls, img: GrayImage, fragment_id: str = "", invert: bool = False,
                   close_radius: float = 10.0) -> "Fragment":
        """Silhouette of the paper (bright, or dark with ``invert``) on a
        contrasting scanner background."""
        mask = binarize(img, "otsu", invert=invert).mask
        return cls(img, silhouette(mask, close_radius), fragment_id)
