"""Synthetic traffic-sign data generation and fair cross-domain classifier comparison."""

from .imaging import Raster, RandomSource, load_png, resize_bilinear, rng_derive, save_png
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "Raster", "RandomSource", "load_png", "save_png", "resize_bilinear", "rng_derive",
    "KERNEL_BACKEND", "__version__",
]
