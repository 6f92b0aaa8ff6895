"""Perona-Malik anisotropic diffusion on unit-scale intensities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .raster import GrayImage

CONDUCTIONS = ("exponential", "rational")


@dataclass(frozen=True)
class DiffusionParams:
    iterations: int = 15
    lam: float = 0.2
    kappa: float = 0.05
    conduction: str = "exponential"

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.lam <= 0.25:
            raise ValueError("lambda must lie in (0, 0.25] for a stable explicit scheme")
        if not self.kappa > 0.0:
            raise ValueError("kappa must be positive")
        if self.conduction not in CONDUCTIONS:
            raise ValueError(f"conduction must be one of {CONDUCTIONS}")


def conduction(g, kappa: float, kind: str = "exponential"):
    """Edge-stopping coefficient in (0, 1]; equals 1 at zero gradient."""
    if kind == "exponential":
        if np.ndim(g) == 0:
            return math.exp(-((g / kappa) ** 2))
        return np.exp(-((np.asarray(g, dtype=float) / kappa) ** 2))
    if kind == "rational":
        return 1.0 / (1.0 + (np.asarray(g, dtype=float) / kappa) ** 2)
    raise ValueError(f"unknown conduction {kind!r}")


def diffuse_step(u: np.ndarray, params: DiffusionParams) -> np.ndarray:
    """One explicit 4-neighbour update with replicated (Neumann) borders."""
    kind = CONDUCTIONS.index(params.conduction)
    return kernels.diffuse_step(np.asarray(u, dtype=np.float64), params.lam, params.kappa, kind)


def diffuse(u: np.ndarray, params: DiffusionParams) -> np.ndarray:
    out = np.asarray(u, dtype=np.float64)
    for _ in range(params.iterations):
        out = diffuse_step(out, params)
    return out


def anisotropic_diffuse(img: GrayImage, params: DiffusionParams = DiffusionParams()) -> GrayImage:
    if params.iterations == 0:
        return img
    return GrayImage.from_unit(diffuse(img.unit(), params))
