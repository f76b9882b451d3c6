"""Sliding-window parametric (CP) maps and coefficient-weighted (WCP) grids.

A CP map assigns every subband pixel the model parameter fitted to the
absolute coefficients inside an odd replicate-padded window centered
there.  The default estimator is the closed-form moment fit, cheap enough
for step-1 sliding windows; full per-window likelihood refinement is
available behind a flag.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.special import k0e

from . import statmodel
from .imagecore import ImageGrid

__all__ = ["ParametricMap", "cp_image", "roi_to_subband", "wcp_image"]

_LOG = logging.getLogger(__name__)

_MODELS = ("riig-delta", "nakagami-m")

# Window-local RiIG estimation matches the first two amplitude moments.
# With eta = delta*gamma and beta = 0,
#     E[r]^2 / E[r^2] = (eta/2) * (exp(eta) K0(eta))^2 =: h(eta),
# h strictly increasing from 0 to pi/4, so eta is recovered by inverting h
# on a precomputed grid and delta = sqrt(eta * E[r^2] / 2).  Low-order
# moments keep the window variance far below what squared-sample moments
# allow at 13x13 = 169 samples.
_ETA_GRID = np.geomspace(1e-4, 1e4, 4097)
_RHO_GRID = 0.5 * _ETA_GRID * k0e(_ETA_GRID) ** 2
_LOG_ETA_GRID = np.log(_ETA_GRID)

# Beyond this IG shape the window is statistically indistinguishable from
# the Rayleigh limit (delta diverges along a likelihood ridge); such
# windows count as fit failures and take the global-subband parameter.
_ETA_IDENTIFIABLE = 10.0


@dataclass(frozen=True)
class ParametricMap:
    """Parameter map over a subband grid.

    fallback_count reports how many windows produced no usable local fit
    and received the global-subband parameter instead.
    """

    grid: ImageGrid
    model: str
    window: int
    fallback_count: int = 0

    def __post_init__(self) -> None:
        if self.model not in _MODELS:
            raise ValueError(f"unknown model tag {self.model!r}")


def _global_fallback(amplitude: np.ndarray, model: str) -> float:
    """Whole-subband parameter used where a window fit degenerates."""
    try:
        if model == "riig-delta":
            return statmodel.fit_riig(amplitude.ravel()).delta
        return statmodel.fit_nakagami(amplitude.ravel()).m
    except ValueError:
        # Fully degenerate subband (for instance identically zero): no
        # parameter is estimable at all; pin the smallest admissible value.
        return 1e-3 if model == "riig-delta" else 0.5


def _moment_maps(amplitude: np.ndarray, window: int, model: str) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized window-local moment estimates plus a validity mask."""
    m2 = uniform_filter(amplitude**2, size=window, mode="nearest")
    if model == "riig-delta":
        m1 = uniform_filter(amplitude, size=window, mode="nearest")
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = m1**2 / m2
            eta = np.exp(np.interp(rho, _RHO_GRID, _LOG_ETA_GRID))
            value = np.clip(np.sqrt(eta * m2 / 2.0), 1e-3, 1e3)
        ok = (
            (m2 > 0)
            & np.isfinite(rho)
            & (rho > _RHO_GRID[0])
            & (rho < _RHO_GRID[-1])
            & (eta <= _ETA_IDENTIFIABLE)
        )
        return value, ok
    m4 = uniform_filter(amplitude**4, size=window, mode="nearest")
    var = m4 - m2**2
    ok = (var > 0) & np.isfinite(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.maximum(m2**2 / var, 0.5)
    return value, ok


def _mle_maps(amplitude: np.ndarray, window: int, model: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-window likelihood fits; orders of magnitude slower."""
    half = window // 2
    padded = np.pad(amplitude, half, mode="edge")
    rows, cols = amplitude.shape
    value = np.empty((rows, cols))
    ok = np.ones((rows, cols), dtype=bool)
    for i in range(rows):
        for j in range(cols):
            patch = padded[i : i + window, j : j + window].ravel()
            try:
                if model == "riig-delta":
                    fit = statmodel.fit_riig(patch)
                    value[i, j] = fit.delta
                    # Same identifiability rule as the moment path: a fit
                    # that has drifted onto the Rayleigh ridge is a failure.
                    ok[i, j] = fit.delta * fit.gamma <= _ETA_IDENTIFIABLE
                else:
                    value[i, j] = statmodel.fit_nakagami(patch).m
            except ValueError:
                value[i, j] = np.nan
                ok[i, j] = False
    return value, ok


def cp_image(
    subband: ImageGrid,
    window: int = 13,
    model: str = "riig-delta",
    refine: str = "moment",
) -> ParametricMap:
    """Parametric map of the subband under a sliding window of step 1.

    Windows whose local fit degenerates (zero spread, nonfinite moments)
    fall back to the global-subband parameter; the count is logged and
    recorded on the returned map.
    """
    if model not in _MODELS:
        raise ValueError(f"unknown model tag {model!r}")
    if refine not in ("moment", "mle"):
        raise ValueError(f"unknown refine mode {refine!r}")
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and positive, got {window}")

    amplitude = np.abs(subband.data)
    if refine == "moment":
        value, ok = _moment_maps(amplitude, window, model)
    else:
        value, ok = _mle_maps(amplitude, window, model)

    fallbacks = int((~ok).sum())
    if fallbacks:
        value = np.where(ok, value, _global_fallback(amplitude, model))
        _LOG.warning(
            "cp_image: %d/%d windows fell back to the global %s fit",
            fallbacks, value.size, model,
        )
    return ParametricMap(
        grid=ImageGrid(np.ascontiguousarray(value), "parameter-map"),
        model=model,
        window=window,
        fallback_count=fallbacks,
    )


def wcp_image(cp: ParametricMap, subband: ImageGrid) -> ImageGrid:
    """Elementwise product of the parameter map with the signed subband."""
    if cp.grid.shape != subband.shape:
        raise ValueError(
            f"dimension mismatch: map {cp.grid.shape} vs subband {subband.shape}"
        )
    return ImageGrid(cp.grid.data * subband.data, "coefficient")


def roi_to_subband(mask: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resample of a lesion mask onto subband dims.

    Guaranteed nonempty: a mask that vanishes under resampling gets its
    resampled centroid pixel switched on.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask is empty")
    rows, cols = mask.shape
    out_rows, out_cols = shape
    src_r = ((np.arange(out_rows) + 0.5) * rows / out_rows).astype(int)
    src_c = ((np.arange(out_cols) + 0.5) * cols / out_cols).astype(int)
    out = mask[np.minimum(src_r, rows - 1)[:, None], np.minimum(src_c, cols - 1)]
    if not out.any():
        ci, cj = (coords.mean() for coords in np.nonzero(mask))
        ti = min(int((ci + 0.5) * out_rows / rows), out_rows - 1)
        tj = min(int((cj + 0.5) * out_cols / cols), out_cols - 1)
        out[ti, tj] = True
    return out
