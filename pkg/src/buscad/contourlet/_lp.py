"""Laplacian pyramid with exact round trip.

Decomposition stores a downsampled lowpass plus a full-resolution residual
per level.  Reconstruction uses the dual-frame form (filter the residual,
correct the coarse band, then upsample) rather than plain addition; with a
biorthogonal filter pair the round trip is then algebraically exact.
"""

from __future__ import annotations

import numpy as np

from ._ops import sefilter2


def _adjust(g: np.ndarray) -> tuple[int, int]:
    a = (len(g) + 1) % 2
    return (a, a)


def lp_decompose_level(
    x: np.ndarray, h: np.ndarray, g: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """One pyramid level: (coarse at half size, residual at full size)."""
    if x.shape[0] % 2 or x.shape[1] % 2:
        raise ValueError(f"pyramid level needs even dimensions, got {x.shape}")
    lowpass = sefilter2(x, h, h, "per")
    coarse = lowpass[::2, ::2]
    up = np.zeros_like(x)
    up[::2, ::2] = coarse
    residual = x - sefilter2(up, g, g, "per", _adjust(g))
    return coarse, residual


def lp_reconstruct_level(
    coarse: np.ndarray, residual: np.ndarray, h: np.ndarray, g: np.ndarray
) -> np.ndarray:
    """Invert :func:`lp_decompose_level` exactly."""
    hi = sefilter2(residual, h, h, "per")
    corrected = coarse - hi[::2, ::2]
    up = np.zeros_like(residual)
    up[::2, ::2] = corrected
    return sefilter2(up, g, g, "per", _adjust(g)) + residual


def lp_decompose(
    x: np.ndarray, levels: int, h: np.ndarray, g: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Full pyramid: (final lowpass, residuals fine-to-coarse)."""
    if levels < 1:
        raise ValueError("pyramid needs at least one level")
    if x.shape[0] % (1 << levels) or x.shape[1] % (1 << levels):
        raise ValueError(
            f"{levels} pyramid levels need dimensions divisible by {1 << levels}, "
            f"got {x.shape}"
        )
    details: list[np.ndarray] = []
    current = x
    for _ in range(levels):
        current, residual = lp_decompose_level(current, h, g)
        details.append(residual)
    return current, details


def lp_reconstruct(
    lowpass: np.ndarray, details: list[np.ndarray], h: np.ndarray, g: np.ndarray
) -> np.ndarray:
    """Invert :func:`lp_decompose`."""
    current = lowpass
    for residual in reversed(details):
        current = lp_reconstruct_level(current, residual, h, g)
    return current
