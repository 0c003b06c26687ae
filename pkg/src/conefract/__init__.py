"""Facial reduction preprocessing for conic linear programs."""

from .cones import (
    ConeBlock,
    ConeProduct,
    Face,
    NonNegFace,
    PSDFace,
    SOCFace,
    nonneg,
    product,
    psd,
    smat,
    soc,
    svec,
)

__all__ = [
    "ConeBlock",
    "ConeProduct",
    "Face",
    "NonNegFace",
    "PSDFace",
    "SOCFace",
    "nonneg",
    "product",
    "psd",
    "smat",
    "soc",
    "svec",
]

__version__ = "0.1.0"
