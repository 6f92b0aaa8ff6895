"""Reconstruct a torn document from two scanned fragments."""

from .errors import TornMendError
from .kernels import BACKEND
from .raster import BinaryMask, Fragment, GrayImage, Polyline

__version__ = "0.1.0"

__all__ = ["BACKEND", "BinaryMask", "Fragment", "GrayImage", "Polyline", "TornMendError",
           "__version__"]
