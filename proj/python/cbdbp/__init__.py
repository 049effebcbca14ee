"""Python bindings for the cbdbp library."""

from ._core import (
    beta2_from_D,
    cb_essfm,
    config,
    default_overlap,
    edc,
    preset,
    rms_per_2d,
    simulate,
)

__all__ = [
    "beta2_from_D",
    "cb_essfm",
    "config",
    "default_overlap",
    "edc",
    "preset",
    "rms_per_2d",
    "simulate",
]
