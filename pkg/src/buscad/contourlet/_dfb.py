"""Directional filter bank via a ladder (lifting) fan filter network.

A 2^n-channel bank is built from a binary tree of two-channel fan splits.
Each split is a quincunx or parallelogram polyphase rearrangement (pure
index permutations) followed by two lifting steps; both parts have exact
algebraic inverses, so the whole bank reconstructs perfectly regardless of
the ladder filter taps.

Channel geometry: for n >= 2 the first 2^(n-1) output bands are the
"mostly horizontal" wedges, shaped (rows/2^(n-1), cols/2); the second half
are "mostly vertical", shaped (rows/2, cols/2^(n-1)).  Total sample count
always equals the input (critical sampling).
"""

from __future__ import annotations

import numpy as np

from ._filters import ladder_filter
from ._ops import resamp, sefilter2

_SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# Polyphase rearrangements (exact index permutations).

def qp_decompose(x: np.ndarray, qtype: str) -> tuple[np.ndarray, np.ndarray]:
    """Quincunx polyphase split; '1r' halves rows, '2c' halves columns."""
    if qtype == "1r":
        y = resamp(x, 1)
        p0 = resamp(y[::2, :], 2)
        p1 = resamp(np.roll(y[1::2, :], -1, axis=1), 2)
        return p0, p1
    if qtype == "2c":
        y = resamp(x, 3)
        p0 = resamp(y[:, ::2], 0)
        p1 = resamp(np.roll(y, -1, axis=0)[:, 1::2], 0)
        return p0, p1
    raise ValueError(f"unknown quincunx type {qtype!r}")


def qp_reconstruct(p0: np.ndarray, p1: np.ndarray, qtype: str) -> np.ndarray:
    if qtype == "1r":
        m, n = p0.shape
        y = np.zeros((2 * m, n))
        y[::2, :] = resamp(p0, 3)
        y[1::2, :] = np.roll(resamp(p1, 3), 1, axis=1)
        return resamp(y, 0)
    if qtype == "2c":
        m, n = p0.shape
        y = np.zeros((m, 2 * n))
        y[:, ::2] = resamp(p0, 1)
        y[:, 1::2] = np.roll(resamp(p1, 1), 1, axis=0)
        return resamp(y, 2)
    raise ValueError(f"unknown quincunx type {qtype!r}")


def pp_decompose(x: np.ndarray, ptype: int) -> tuple[np.ndarray, np.ndarray]:
    """Parallelogram polyphase split; types 0/1 halve rows, 2/3 columns."""
    if ptype == 0:
        return (
            resamp(x[::2, :], 2),
            resamp(np.roll(x[1::2, :], -1, axis=1), 2),
        )
    if ptype == 1:
        return resamp(x[::2, :], 3), resamp(x[1::2, :], 3)
    if ptype == 2:
        return (
            resamp(x[:, ::2], 0),
            resamp(np.roll(x[:, 1::2], -1, axis=0), 0),
        )
    if ptype == 3:
        return resamp(x[:, ::2], 1), resamp(x[:, 1::2], 1)
    raise ValueError(f"unknown parallelogram type {ptype}")


def pp_reconstruct(p0: np.ndarray, p1: np.ndarray, ptype: int) -> np.ndarray:
    m, n = p0.shape
    if ptype in (0, 1):
        x = np.zeros((2 * m, n))
        if ptype == 0:
            x[::2, :] = resamp(p0, 3)
            x[1::2, :] = np.roll(resamp(p1, 3), 1, axis=1)
        else:
            x[::2, :] = resamp(p0, 2)
            x[1::2, :] = resamp(p1, 2)
        return x
    if ptype in (2, 3):
        x = np.zeros((m, 2 * n))
        if ptype == 2:
            x[:, ::2] = resamp(p0, 1)
            x[:, 1::2] = np.roll(resamp(p1, 1), 1, axis=0)
        else:
            x[:, ::2] = resamp(p0, 0)
            x[:, 1::2] = resamp(p1, 0)
        return x
    raise ValueError(f"unknown parallelogram type {ptype}")


# ---------------------------------------------------------------------------
# Two-channel ladder split.

def _modulated(f: np.ndarray) -> np.ndarray:
    fm = f.copy()
    fm[::2] = -fm[::2]
    return fm


def fb_decompose(
    x: np.ndarray, f: np.ndarray, kind: str, sub, mode: str = "per"
) -> tuple[np.ndarray, np.ndarray]:
    """One fan split: polyphase rearrange, then two lifting steps."""
    fm = _modulated(f)
    if kind == "q":
        p0, p1 = qp_decompose(x, sub)
    elif kind == "p":
        p0, p1 = pp_decompose(x, sub)
    else:
        raise ValueError(f"unknown filter bank kind {kind!r}")
    y0 = (p0 - sefilter2(p1, fm, fm, mode, (1, 1))) / _SQRT2
    y1 = (-_SQRT2 * p1) - sefilter2(y0, fm, fm, mode)
    return y0, y1


def fb_reconstruct(
    y0: np.ndarray, y1: np.ndarray, f: np.ndarray, kind: str, sub, mode: str = "per"
) -> np.ndarray:
    """Exact inverse of :func:`fb_decompose` (lifting steps unwound)."""
    fm = _modulated(f)
    p1 = -(y1 + sefilter2(y0, fm, fm, mode)) / _SQRT2
    p0 = _SQRT2 * y0 + sefilter2(p1, fm, fm, mode, (1, 1))
    if kind == "q":
        return qp_reconstruct(p0, p1, sub)
    if kind == "p":
        return pp_reconstruct(p0, p1, sub)
    raise ValueError(f"unknown filter bank kind {kind!r}")


# ---------------------------------------------------------------------------
# Back-sampling: shear the tree outputs so overall sampling is diagonal.

def backsamp(bands: list[np.ndarray]) -> list[np.ndarray]:
    n = int(np.log2(len(bands)))
    out = list(bands)
    if n == 1:
        for k in range(2):
            b = resamp(out[k], 3)
            b[:, ::2] = resamp(b[:, ::2], 0)
            b[:, 1::2] = resamp(b[:, 1::2], 0)
            out[k] = b
    elif n >= 2:
        half = 1 << (n - 1)
        for k in range(1 << (n - 2)):
            shift = 2 * (k + 1) - ((1 << (n - 2)) + 1)
            out[2 * k] = resamp(out[2 * k], 2, shift)
            out[2 * k + 1] = resamp(out[2 * k + 1], 2, shift)
            out[2 * k + half] = resamp(out[2 * k + half], 0, shift)
            out[2 * k + 1 + half] = resamp(out[2 * k + 1 + half], 0, shift)
    return out


def rebacksamp(bands: list[np.ndarray]) -> list[np.ndarray]:
    n = int(np.log2(len(bands)))
    out = list(bands)
    if n == 1:
        for k in range(2):
            b = out[k].copy()
            b[:, ::2] = resamp(b[:, ::2], 1)
            b[:, 1::2] = resamp(b[:, 1::2], 1)
            out[k] = resamp(b, 2)
    elif n >= 2:
        half = 1 << (n - 1)
        for k in range(1 << (n - 2)):
            shift = 2 * (k + 1) - ((1 << (n - 2)) + 1)
            out[2 * k] = resamp(out[2 * k], 3, shift)
            out[2 * k + 1] = resamp(out[2 * k + 1], 3, shift)
            out[2 * k + half] = resamp(out[2 * k + half], 1, shift)
            out[2 * k + 1 + half] = resamp(out[2 * k + 1 + half], 1, shift)
    return out


# ---------------------------------------------------------------------------
# Full tree.

def _check_band(x: np.ndarray, n: int) -> None:
    need = 1 << max(n - 1, 1)
    if x.shape[0] % need or x.shape[1] % need:
        raise ValueError(
            f"{1 << n}-direction bank needs dimensions divisible by {need}, "
            f"got {x.shape}"
        )


def dfb_decompose(x: np.ndarray, num_directions: int) -> list[np.ndarray]:
    """Split a band into num_directions wedge subbands (critically sampled)."""
    if num_directions not in (2, 4, 8, 16, 32):
        raise ValueError(f"unsupported direction count {num_directions}")
    n = int(np.log2(num_directions))
    _check_band(x, n)
    f = ladder_filter()

    if n == 1:
        y0, y1 = fb_decompose(x, f, "q", "1r", "qper_col")
        y = [y0, y1]
    else:
        x0, x1 = fb_decompose(x, f, "q", "1r", "qper_col")
        y: list[np.ndarray] = [None] * 4  # type: ignore[list-item]
        y[1], y[0] = fb_decompose(x0, f, "q", "2c")
        y[3], y[2] = fb_decompose(x1, f, "q", "2c")
        for level in range(3, n + 1):
            prev = y
            y = [None] * (1 << level)  # type: ignore[list-item]
            for k in range(1 << (level - 2)):
                y[2 * k + 1], y[2 * k] = fb_decompose(prev[k], f, "p", k % 2)
            for k in range(1 << (level - 2), 1 << (level - 1)):
                y[2 * k + 1], y[2 * k] = fb_decompose(prev[k], f, "p", k % 2 + 2)
    y = backsamp(y)
    half = 1 << (n - 1)
    y[half:] = y[half:][::-1]
    return y


def dfb_reconstruct(bands: list[np.ndarray]) -> np.ndarray:
    """Exact inverse of :func:`dfb_decompose`."""
    num = len(bands)
    if num not in (2, 4, 8, 16, 32):
        raise ValueError(f"unsupported direction count {num}")
    n = int(np.log2(num))
    f = ladder_filter()

    y = list(bands)
    half = 1 << (n - 1)
    y[half:] = y[half:][::-1]
    y = rebacksamp(y)
    if n == 1:
        return fb_reconstruct(y[0], y[1], f, "q", "1r", "qper_col")
    for level in range(n, 2, -1):
        prev = y
        y = [None] * (1 << (level - 1))  # type: ignore[list-item]
        for k in range(1 << (level - 2)):
            y[k] = fb_reconstruct(prev[2 * k + 1], prev[2 * k], f, "p", k % 2)
        for k in range(1 << (level - 2), 1 << (level - 1)):
            y[k] = fb_reconstruct(prev[2 * k + 1], prev[2 * k], f, "p", k % 2 + 2)
    x0 = fb_reconstruct(y[1], y[0], f, "q", "2c")
    x1 = fb_reconstruct(y[3], y[2], f, "q", "2c")
    return fb_reconstruct(x0, x1, f, "q", "1r", "qper_col")
