"""Filter constructions for the pyramid and directional stages."""

from __future__ import annotations

import numpy as np

_Y_TAPS = np.array([-0.25, 0.5, -0.25])  # y(z) = (2 - z - 1/z)/4 as centered taps


def _laurent_from_poly(coeffs: np.ndarray) -> np.ndarray:
    """Evaluate a polynomial in y(z) as centered Laurent-filter taps.

    coeffs are ascending powers of y.  Horner in tap space: each step
    convolves with the 3-tap y(z) and adds the next coefficient at the
    center.
    """
    taps = np.array([coeffs[-1]], dtype=np.float64)
    for c in coeffs[-2::-1]:
        taps = np.convolve(taps, _Y_TAPS)
        taps[len(taps) // 2] += c
    return taps


def pyramid_filters(name: str = "9-7") -> tuple[np.ndarray, np.ndarray]:
    """Return the (analysis, synthesis) lowpass pair for the pyramid.

    '9-7': the biorthogonal 9/7 pair, derived by factoring the maximally
    flat half-band product 2 cos^8(w/2) B(sin^2(w/2)) with
    B(y) = 1 + 4y + 10y^2 + 20y^3.  Factoring at run time (np.roots)
    instead of hard-coding truncated constants keeps the half-band
    identity, and with it the pyramid round trip, exact to machine
    precision.

    'haar': the orthonormal 2-tap pair; with it the detail/lowpass energy
    split is exactly conservative.
    """
    if name == "haar":
        h = np.array([1.0, 1.0]) / np.sqrt(2.0)
        return h, h.copy()
    if name != "9-7":
        raise ValueError(f"unknown pyramid filter {name!r}")

    roots = np.roots([20.0, 10.0, 4.0, 1.0])
    real_roots = roots[np.abs(roots.imag) < 1e-9].real
    cplx_roots = roots[roots.imag > 1e-9]
    if real_roots.size != 1 or cplx_roots.size != 1:
        raise RuntimeError("unexpected root structure for the half-band factor")
    y_r = float(real_roots[0])
    y_c = complex(cplx_roots[0])

    binom = np.convolve([1.0, 2.0, 1.0], [1.0, 2.0, 1.0]) / 16.0  # (1+z)^2(1+1/z)^2/16
    q_syn = _laurent_from_poly(np.array([-y_r, 1.0]))
    q_ana = _laurent_from_poly(np.array([abs(y_c) ** 2, -2.0 * y_c.real, 1.0]))
    h = np.convolve(binom, q_ana)  # 9 taps
    g = np.convolve(binom, q_syn)  # 7 taps
    h *= np.sqrt(2.0) / h.sum()
    g *= np.sqrt(2.0) / g.sum()
    return h, g


def ladder_filter() -> np.ndarray:
    """12-tap symmetric ladder filter driving the fan filter bank.

    The directional stage is a lifting (ladder) network, so reconstruction
    is exact for any choice here; these taps shape the directional
    selectivity of the resulting fan response.
    """
    v = np.array([0.6300, -0.1930, 0.0972, -0.0526, 0.0272, -0.0144])
    return np.concatenate([v[::-1], v])
