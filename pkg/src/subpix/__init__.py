"""Sublinear-query approximate matching of images under affine transformations."""
from ._backend import BACKEND
from .core import (BinaryImage2D, BinaryImage3D, CapacityError, DomainError, GrayImage2D,
                   ImageFormatError, MeteredImage, SubpixError, is_smooth, perimeter)
from .transform import AffineMap2D, AffineMap3D, IntensityMap, RestrictedMap3D

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BinaryImage2D", "BinaryImage3D", "GrayImage2D", "MeteredImage",
    "SubpixError", "DomainError", "CapacityError", "ImageFormatError",
    "is_smooth", "perimeter", "AffineMap2D", "AffineMap3D", "IntensityMap", "RestrictedMap3D",
]
