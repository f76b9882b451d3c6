"""Shared low-level array operations: extension, separable filtering, shears.

Everything here is an exact linear operator on periodic(-ish) lattices; the
decompose/reconstruct pairs built on top invert each other algebraically, so
round-trip error is pure floating-point noise.
"""

from __future__ import annotations

import numpy as np


def extend2(
    x: np.ndarray, ru: int, rd: int, cl: int, cr: int, mode: str = "per"
) -> np.ndarray:
    """Extend a 2-D array by (ru, rd) rows and (cl, cr) columns.

    'per' wraps both axes.  'qper_col' wraps rows on the quincunx lattice
    (each full row period shifts columns by half a period) and columns
    periodically; extensions wider than the array are handled by walking
    the lattice, so deep-level tiny bands still extend correctly.
    """
    m, n = x.shape
    ci = np.arange(-cl, n + cr) % n
    if mode == "per":
        ri = np.arange(-ru, m + rd) % m
        return x[np.ix_(ri, ci)]
    if mode == "qper_col":
        if n % 2:
            raise ValueError("qper_col extension needs an even column count")
        rows = np.arange(-ru, m + rd)
        q, r = np.divmod(rows, m)
        cols = (ci[None, :] + (q * (n // 2))[:, None]) % n
        return x[r[:, None], cols]
    raise ValueError(f"unknown extension mode {mode!r}")


def _conv_valid(x: np.ndarray, f: np.ndarray, axis: int) -> np.ndarray:
    taps = len(f)
    n_out = x.shape[axis] - taps + 1
    shape = list(x.shape)
    shape[axis] = n_out
    out = np.zeros(shape)
    sl = [slice(None), slice(None)]
    for k in range(taps):
        sl[axis] = slice(taps - 1 - k, taps - 1 - k + n_out)
        out += f[k] * x[tuple(sl)]
    return out


def sefilter2(
    x: np.ndarray,
    f1: np.ndarray,
    f2: np.ndarray,
    mode: str = "per",
    shift: tuple[int, int] = (0, 0),
) -> np.ndarray:
    """Separable 2-D filtering with extension; output matches input size.

    f1 runs along rows (axis 0), f2 along columns.  shift biases the
    extension asymmetrically, displacing the effective filter origin.
    """
    lf1 = (len(f1) - 1) / 2.0
    lf2 = (len(f2) - 1) / 2.0
    ext = extend2(
        x,
        int(np.floor(lf1)) + shift[0],
        int(np.ceil(lf1)) - shift[0],
        int(np.floor(lf2)) + shift[1],
        int(np.ceil(lf2)) - shift[1],
        mode,
    )
    return _conv_valid(_conv_valid(ext, f1, axis=0), f2, axis=1)


def resamp(x: np.ndarray, rtype: int, shift: int = 1) -> np.ndarray:
    """Unimodular shear resampling; types 0/1 shear rows, 2/3 columns.

    type 0: y[i,j] = x[(i + s*j) mod m, j]      type 1: inverse of 0
    type 2: y[i,j] = x[i, (j + s*i) mod n]      type 3: inverse of 2
    """
    m, n = x.shape
    if rtype == 0 or rtype == 1:
        s = shift if rtype == 0 else -shift
        jj = np.arange(n)
        rows = (np.arange(m)[:, None] + (s * jj % m)[None, :]) % m
        return x[rows, jj[None, :]]
    if rtype == 2 or rtype == 3:
        s = shift if rtype == 2 else -shift
        ii = np.arange(m)
        cols = (np.arange(n)[None, :] + (s * ii % n)[:, None]) % n
        return x[ii[:, None], cols]
    raise ValueError(f"unknown resampling type {rtype}")
