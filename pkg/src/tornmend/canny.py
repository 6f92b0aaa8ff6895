"""Canny edge detection: smoothing, Sobel gradients, non-maximum
suppression, double thresholding and hysteresis tracking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidThresholds

NONE, WEAK, STRONG = 0, 1, 2

# True-convolution kernels (pre-flipped) so that gx > 0 where intensity
# grows toward +x and gy > 0 where it grows toward +y (downward).
SOBEL_X = np.array([[1.0, 0.0, -1.0], [2.0, 0.0, -2.0], [1.0, 0.0, -1.0]])
SOBEL_Y = SOBEL_X.T.copy()

# magnitudes below this are convolution round-off, not edges
NOISE_FLOOR = 1e-6


@dataclass(frozen=True)
class CannyParams:
    """``low``/``high`` left as None select quantile-adaptive thresholds."""

    sigma: float = 1.4
    low: float | None = None
    high: float | None = None
    norm: str = "l2"
    high_quantile: float = 0.85
    low_ratio: float = 0.4

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.norm not in ("l2", "l1"):
            raise ValueError("norm must be 'l2' or 'l1'")
        if (self.low is None) != (self.high is None):
            raise InvalidThresholds("give both low and high, or neither")
        if self.low is not None and not 0 < self.low < self.high:
            raise InvalidThresholds("thresholds must satisfy 0 < low < high")
        if not 0.0 < self.high_quantile < 1.0 or not 0.0 < self.low_ratio < 1.0:
            raise ValueError("adaptive threshold settings must lie in (0, 1)")


@dataclass
class GradientField:
    magnitude: np.ndarray
    direction: np.ndarray  # int8 codes: 0 -> 0°, 1 -> 45°, 2 -> 90°, 3 -> 135°

    @property
    def degrees(self):
        return self.direction.astype(int) * 45


@dataclass
class EdgeMap:
    labels: np.ndarray  # uint8, NONE / WEAK / STRONG
    final: np.ndarray = field(default=None)  # bool

    def edge_pixels(self) -> int:
        return int(self.final.sum()) if self.final is not None else 0


def gaussian_kernel(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    r = int(math.ceil(3.0 * sigma))
    ax = np.arange(-r, r + 1, dtype=np.float64)
    raw = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma * sigma))
    return raw / raw.sum()


def convolve(img, kernel) -> np.ndarray:
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1] or kernel.shape[0] % 2 == 0:
        raise ValueError("kernel must be square with odd side")
    return kernels.convolve(np.asarray(img, dtype=np.float64), kernel)


def quantize_direction(gx, gy) -> np.ndarray:
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    return (np.floor(ang / 45.0 + 0.5).astype(np.int64) % 4).astype(np.int8)


def gradient(img, norm: str = "l2") -> GradientField:
    img = np.asarray(img, dtype=np.float64)
    gx = kernels.convolve(img, SOBEL_X)
    gy = kernels.convolve(img, SOBEL_Y)
    if norm == "l2":
        mag = np.sqrt(gx * gx + gy * gy)
    elif norm == "l1":
        mag = np.abs(gx) + np.abs(gy)
    else:
        raise ValueError("norm must be 'l2' or 'l1'")
    return GradientField(mag, quantize_direction(gx, gy))


def non_max_suppression(field: GradientField) -> np.ndarray:
    """Keep pixels strictly above the forward neighbour and at least the
    backward one along the quantized gradient direction."""
    return kernels.nms(field.magnitude, field.direction)


def adaptive_thresholds(thin: np.ndarray, params: CannyParams):
    vals = thin[thin > NOISE_FLOOR]
    if vals.size == 0:
        return None
    high = float(np.quantile(vals, params.high_quantile))
    top = float(vals.max())
    if high >= top:
        # flat response (a clean step): keep the strongest pixels strong
        high = float(np.nextafter(top, 0.0))
    low = max(params.low_ratio * high, NOISE_FLOOR)
    if not 0 < low < high:
        return None
    return low, high


def double_threshold(thin: np.ndarray, low: float, high: float) -> EdgeMap:
    if not 0 < low < high:
        raise InvalidThresholds(f"need 0 < low < high, got low={low}, high={high}")
    labels = np.full(thin.shape, WEAK, dtype=np.uint8)
    labels[thin < low] = NONE
    labels[thin > high] = STRONG
    return EdgeMap(labels)


def hysteresis(labeled: EdgeMap) -> EdgeMap:
    final = kernels.hysteresis(labeled.labels)
    return EdgeMap(labeled.labels, final)


def canny(img, params: CannyParams = CannyParams()) -> EdgeMap:
    img = np.asarray(img, dtype=np.float64)
    smoothed = convolve(img, gaussian_kernel(params.sigma))
    thin = non_max_suppression(gradient(smoothed, params.norm))
    if params.low is not None:
        low, high = params.low, params.high
    else:
        th = adaptive_thresholds(thin, params)
        if th is None:
            empty = np.zeros(img.shape, dtype=np.uint8)
            return EdgeMap(empty, np.zeros(img.shape, dtype=bool))
        low, high = th
    return hysteresis(double_threshold(thin, low, high))
