"""Per-case feature extraction over the six weighted subband grids.

Twenty named features per subband block (the PSD triple counts as one
feature, three scalars).  Geometric and boundary features live at B-mode
resolution and are replicated across blocks; intensity, spectral, and
fit-quality features are computed on each weighted grid inside the
nearest-neighbor-resampled lesion mask.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import solve_toeplitz
from scipy.ndimage import distance_transform_edt
from scipy.signal import find_peaks

from . import statmodel
from .contourlet import NAMED_SUBBAND_KEYS, NamedSubbandSet
from .imagecore import ImageGrid
from .parametric import roi_to_subband
from .segmentation import LesionRegion, TiltedEllipse

__all__ = [
    "FEATURE_NAMES",
    "CaseImages",
    "FeatureVector",
    "echo_pattern_class",
    "echo_ratio_features",
    "ellipse_geometry",
    "ellipse_raster",
    "extract_all",
    "fit_quality_features",
    "lesion_boundary_class",
    "margin_class",
    "orientation_class",
    "psd_peaks",
    "shape_class",
    "taller_than_wide",
    "texture_std",
]

_LOG = logging.getLogger(__name__)

FEATURE_NAMES = (
    "Hypo_echo",
    "MicroLb_echo",
    "Homo_echo",
    "Hetero_echo",
    "TW_shape",
    "MicroCal_echo",
    "T_x",
    "S_c",
    "O_c",
    "M_c",
    "L_c",
    "E_pc",
    "R_ellipse",
    "P_ellipse",
    "A_r",
    "CP_ellipse",
    "PSD_peak1",
    "PSD_peak2",
    "PSD_peak3",
    "klv",
    "pp_slope",
    "klb",
)

_LABELS = ("benign", "malignant", "unknown")


@dataclass(frozen=True)
class CaseImages:
    """One case's identity plus its B-mode image at mask resolution."""

    case_id: str
    bmode: ImageGrid
    label: str = "unknown"

    def __post_init__(self) -> None:
        if self.label not in _LABELS:
            raise ValueError(f"label must be one of {_LABELS}")


@dataclass(frozen=True)
class FeatureVector:
    """Ordered block-qualified feature values for one case."""

    case_id: str
    label: str
    values: dict[str, float]

    def __post_init__(self) -> None:
        if self.label not in _LABELS:
            raise ValueError(f"label must be one of {_LABELS}")
        bad = [k for k, v in self.values.items() if not math.isfinite(v)]
        if bad:
            raise ValueError(f"non-finite feature values: {bad}")


def _roi_values(img: ImageGrid, roi: np.ndarray) -> np.ndarray:
    roi = np.asarray(roi, dtype=bool)
    if roi.shape != img.shape:
        raise ValueError(f"ROI shape {roi.shape} does not match image {img.shape}")
    if not roi.any():
        raise ValueError("empty ROI")
    return img.data[roi]


def _safe_ratio(numerator: int, denominator: int, name: str) -> float:
    if denominator == 0:
        _LOG.warning("%s: zero denominator, clamped to 1", name)
        return float(numerator)
    return numerator / denominator


def echo_ratio_features(
    img: ImageGrid, roi: np.ndarray
) -> tuple[float, float, float, float, float]:
    """The five pixel-count ratios over ROI values.

    Thresholds (mean, population std, population variance of the ROI) are
    scalars of the ROI itself.  Ratios with a data-dependent denominator
    of zero return the numerator count (denominator clamped to 1, logged).
    """
    vals = _roi_values(img, roi)
    n = vals.size
    mean = vals.mean()
    std = vals.std()
    var = vals.var()
    hypo = _safe_ratio(int((vals < mean).sum()), int((vals >= mean).sum()), "Hypo_echo")
    microlb = int((vals >= std).sum()) / n
    homo = int((vals >= 0).sum()) / n
    hetero = int((vals < 0).sum()) / n
    microcal = _safe_ratio(
        int((vals >= var).sum()), int((vals < var).sum()), "MicroCal_echo"
    )
    return hypo, microlb, homo, hetero, microcal


def taller_than_wide(e: TiltedEllipse) -> float:
    """|major axis length - minor axis length| / 100 (full axes 2a, 2b)."""
    major = max(2 * e.a, 2 * e.b)
    minor = min(2 * e.a, 2 * e.b)
    return (major - minor) / 100.0


def texture_std(img: ImageGrid, roi: np.ndarray) -> float:
    """Sample (N-1) standard deviation of ROI values."""
    vals = _roi_values(img, roi)
    if vals.size < 2:
        raise ValueError("texture_std needs at least 2 ROI pixels")
    return float(vals.std(ddof=1))


def shape_class(boundary: Sequence[tuple[int, int]], e: TiltedEllipse) -> float:
    """Mean radial distance between boundary pixels and the ellipse.

    Each boundary pixel is projected along the ray from the ellipse center
    through it; the distance to the ray's ellipse intersection is
    |len(ray to pixel) - len(ray to ellipse)|.  Pixels at the center have
    no ray and are skipped (logged).
    """
    if not boundary:
        raise ValueError("empty boundary")
    x0, y0 = e.center
    dists = []
    skipped = 0
    for px, py in boundary:
        vx, vy = px - x0, py - y0
        r = math.hypot(vx, vy)
        if r == 0.0:
            skipped += 1
            continue
        dists.append(abs(r - e.radius_along(math.atan2(vy, vx))))
    if skipped:
        _LOG.warning("shape_class: skipped %d boundary pixels at the center", skipped)
    if not dists:
        raise ValueError("every boundary pixel sits at the ellipse center")
    return float(np.mean(dists))


def orientation_class(theta: float) -> float:
    """Fold an orientation in [0, 2*pi) into [0, pi/2]."""
    if not 0 <= theta < 2 * math.pi:
        raise ValueError("theta must lie in [0, 2*pi)")
    if theta <= math.pi / 2:
        return theta
    if theta <= math.pi:
        return math.pi - theta
    if theta <= 3 * math.pi / 2:
        return theta - math.pi
    return 2 * math.pi - theta


def ellipse_raster(e: TiltedEllipse) -> set[tuple[int, int]]:
    """Integer pixels covered by the ellipse outline (dense sampling)."""
    n = max(64, int(math.ceil(8 * math.pi * max(e.a, e.b))))
    t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    ct, st = np.cos(t), np.sin(t)
    cth, sth = math.cos(e.theta), math.sin(e.theta)
    xs = np.rint(e.center[0] + e.a * ct * cth - e.b * st * sth).astype(int)
    ys = np.rint(e.center[1] + e.a * ct * sth + e.b * st * cth).astype(int)
    return set(zip(xs.tolist(), ys.tolist()))


_RAY_DIRECTIONS = (
    (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1),
)


def margin_class(
    boundary: Sequence[tuple[int, int]],
    raster: Iterable[tuple[int, int]],
    search_limit: int = 13,
) -> float:
    """Mean of per-pixel max hit offsets minus mean of (min offsets + 1).

    A boundary pixel lying on the ellipse raster contributes the single
    offset 0; otherwise its eight compass rays are searched outward and
    each ray's first raster hit within the search limit contributes its
    offset.  Pixels whose rays all miss are excluded from both means.
    A coincident boundary therefore scores exactly -1.
    """
    if not boundary:
        raise ValueError("empty boundary")
    raster = set(raster)
    if not raster:
        raise ValueError("empty ellipse raster")
    mins, maxs = [], []
    for px, py in boundary:
        if (px, py) in raster:
            hits = [0]
        else:
            hits = []
            for dx, dy in _RAY_DIRECTIONS:
                for i in range(1, search_limit + 1):
                    if (px + i * dx, py + i * dy) in raster:
                        hits.append(i)
                        break
        if not hits:
            continue
        mins.append(min(hits) + 1)
        maxs.append(max(hits))
    if not mins:
        raise ValueError("boundary too far from ellipse")
    return float(np.mean(maxs) - np.mean(mins))


def lesion_boundary_class(img: ImageGrid, mask: np.ndarray, k: int = 6) -> float:
    """Mean intensity of the outer boundary band minus the inner band.

    Bands are the pixels within Euclidean distance k of the lesion edge,
    outside respectively inside the mask, clipped at image borders.
    """
    if k < 1:
        raise ValueError("band width must be at least 1")
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != img.shape:
        raise ValueError("mask dims must match image")
    outer = ~mask & (distance_transform_edt(~mask) <= k)
    inner = mask & (distance_transform_edt(mask) <= k)
    if not outer.any() or not inner.any():
        raise ValueError("empty band")
    return float(img.data[outer].mean() - img.data[inner].mean())


def echo_pattern_class(img: ImageGrid, roi: np.ndarray) -> float:
    """Mean Sobel gradient magnitude over ROI pixels whose full 3x3
    neighborhood lies inside the image."""
    roi = np.asarray(roi, dtype=bool)
    if roi.shape != img.shape:
        raise ValueError("ROI dims must match image")
    interior = np.zeros_like(roi)
    interior[1:-1, 1:-1] = roi[1:-1, 1:-1]
    if not interior.any():
        raise ValueError("no interior pixel")
    x = img.data
    gx = (
        (x[:-2, 2:] + 2 * x[1:-1, 2:] + x[2:, 2:])
        - (x[:-2, :-2] + 2 * x[1:-1, :-2] + x[2:, :-2])
    )
    gy = (
        (x[2:, :-2] + 2 * x[2:, 1:-1] + x[2:, 2:])
        - (x[:-2, :-2] + 2 * x[:-2, 1:-1] + x[:-2, 2:])
    )
    magnitude = np.hypot(gx, gy)
    return float(magnitude[interior[1:-1, 1:-1]].mean())


def ellipse_geometry(e: TiltedEllipse) -> tuple[float, float, float, float]:
    """Mean radius, Ramanujan perimeter, area, and compactness P^2/A - 1."""
    a, b = e.a, e.b
    radius = (a + b) / 2.0
    perimeter = math.pi * (3 * (a + b) - math.sqrt((3 * a + b) * (a + 3 * b)))
    area = math.pi * a * b
    compactness = perimeter**2 / area - 1.0
    return radius, perimeter, area, compactness


def psd_peaks(
    e: TiltedEllipse,
    img: ImageGrid,
    scale: tuple[float, float] = (1.0, 1.0),
    min_samples: int | None = None,
    order: int = 10,
    axis: str = "vertical",
) -> tuple[float, float, float]:
    """Frequencies of the first three spectral peaks along a sub-axis.

    Pixels are sampled along the ellipse's vertical (default) or
    horizontal sub-axis, demeaned, fitted with a Yule-Walker AR model,
    and the AR spectrum is scanned on 512 points in [0, 0.5]
    cycles/sample for local maxima of at least 3 dB prominence.  Fewer
    than three peaks pad with 0.5.

    scale maps ellipse coordinates onto the image grid (the ellipse lives
    at B-mode resolution, the grid may be a subband).  min_samples, when
    given, oversamples short segments up to that count so the fit stays
    defined on coarse grids.
    """
    if axis == "vertical":
        direction = (-math.sin(e.theta), math.cos(e.theta))
        half = e.b
    elif axis == "horizontal":
        direction = (math.cos(e.theta), math.sin(e.theta))
        half = e.a
    else:
        raise ValueError(f"unknown axis {axis!r}")
    sx, sy = scale
    npts = int(round(2 * half * math.hypot(direction[0] * sx, direction[1] * sy))) + 1
    if min_samples is not None:
        npts = max(npts, min_samples)
    if npts < 2 * order:
        raise ValueError(
            f"segment too short: {npts} samples for AR order {order}"
        )
    t = np.linspace(-half, half, npts)
    xs = np.clip(
        np.rint((e.center[0] + t * direction[0]) * sx).astype(int), 0, img.width - 1
    )
    ys = np.clip(
        np.rint((e.center[1] + t * direction[1]) * sy).astype(int), 0, img.height - 1
    )
    segment = img.data[ys, xs] - img.data[ys, xs].mean()

    lags = np.array(
        [np.dot(segment[: npts - k], segment[k:]) / npts for k in range(order + 1)]
    )
    if lags[0] <= 0:
        return (0.5, 0.5, 0.5)
    try:
        coef = solve_toeplitz((lags[:order], lags[:order]), lags[1:])
    except np.linalg.LinAlgError:
        _LOG.warning("psd_peaks: singular Yule-Walker system, no peaks reported")
        return (0.5, 0.5, 0.5)
    noise = lags[0] - float(coef @ lags[1:])
    if noise <= 0:
        return (0.5, 0.5, 0.5)

    freqs = np.linspace(0.0, 0.5, 512)
    karr = np.arange(1, order + 1)
    denom = 1.0 - np.exp(-2j * math.pi * freqs[:, None] * karr[None, :]) @ coef
    psd = noise / np.maximum(np.abs(denom) ** 2, np.finfo(float).tiny)
    db = 10.0 * np.log10(np.maximum(psd, np.finfo(float).tiny))
    peaks, _ = find_peaks(db, prominence=3.0)
    found = [float(freqs[i]) for i in peaks[:3]]
    while len(found) < 3:
        found.append(0.5)
    return (found[0], found[1], found[2])


def _fit_quality_values(values: np.ndarray) -> tuple[float, float, float]:
    amps = np.abs(np.asarray(values, dtype=float).ravel())
    fit = statmodel.fit_riig(amps)
    klv = statmodel.ks_statistic(amps, lambda x: statmodel.riig_cdf(x, fit))
    dens, edges = statmodel.histogram_density(amps, 256)
    klb = statmodel.kl_divergence(
        dens, lambda c: statmodel.riig_pdf(c, fit), edges, epsilon_floor=True
    )
    srt = np.sort(amps)
    empirical = np.arange(1, srt.size + 1) / srt.size
    model = np.clip(statmodel.riig_cdf(srt, fit), 0.0, 1.0)
    te = statmodel.pp_transform(empirical)
    ta = statmodel.pp_transform(model)
    if np.ptp(ta) == 0:
        raise ValueError("fit failure: degenerate model cdf")
    slope = float(np.polyfit(ta, te, 1)[0])
    return klv, slope, max(klb, 0.0)


def fit_quality_features(img: ImageGrid, roi: np.ndarray) -> tuple[float, float, float]:
    """KS distance, pp-plot slope, and KL divergence of the amplitude fit.

    The model is fitted to the absolute ROI values; klv compares the
    empirical cdf with the fitted numerical cdf, pp_slope is the
    least-squares slope of the transformed empirical against model
    probabilities at the sorted samples, klb uses the declared 256-bin
    histogram (model density epsilon-floored in far tails).
    """
    return _fit_quality_values(_roi_values(img, roi))


def _intensity_block(
    grid: ImageGrid,
    roi: np.ndarray,
    region: LesionRegion,
    scale: tuple[float, float],
    psd_axis: str,
    block: str,
) -> dict[str, float]:
    hypo, microlb, homo, hetero, microcal = echo_ratio_features(grid, roi)
    values = {
        "Hypo_echo": hypo,
        "MicroLb_echo": microlb,
        "Homo_echo": homo,
        "Hetero_echo": hetero,
        "MicroCal_echo": microcal,
        "T_x": texture_std(grid, roi),
        "L_c": lesion_boundary_class(grid, roi),
        "E_pc": echo_pattern_class(grid, roi),
    }
    f1, f2, f3 = psd_peaks(
        region.ellipse, grid, scale=scale, min_samples=24, axis=psd_axis
    )
    values["PSD_peak1"], values["PSD_peak2"], values["PSD_peak3"] = f1, f2, f3

    quality_vals = grid.data[roi]
    if roi.sum() < 30:
        _LOG.warning(
            "%s: ROI of %d px too small for a fit, widening to the whole grid",
            block, int(roi.sum()),
        )
        quality_vals = grid.data.ravel()
    try:
        klv, slope, klb = _fit_quality_values(quality_vals)
    except ValueError:
        if quality_vals.size == grid.data.size:
            raise
        _LOG.warning("%s: ROI fit failed, widening to the whole grid", block)
        klv, slope, klb = _fit_quality_values(grid.data.ravel())
    values["klv"], values["pp_slope"], values["klb"] = klv, slope, klb
    return values


def extract_all(
    case: CaseImages,
    region: LesionRegion,
    subbands: NamedSubbandSet,
    wcps: Mapping[str, ImageGrid],
    include_bmode: bool = False,
    psd_axis: str = "vertical",
) -> FeatureVector:
    """Concatenated per-subband feature blocks for one case.

    Geometric and boundary features come from the B-mode LesionRegion and
    repeat across blocks; everything else is computed per weighted grid
    inside the resampled lesion mask.  include_bmode appends a BMODE
    block computed on the B-mode image itself.
    """
    missing = [k for k in NAMED_SUBBAND_KEYS if k not in wcps]
    if missing:
        raise ValueError(f"missing weighted grids: {missing}")

    e = region.ellipse
    raster = ellipse_raster(e)
    radius, perimeter, area, compactness = ellipse_geometry(e)
    geometric = {
        "TW_shape": taller_than_wide(e),
        "S_c": shape_class(region.boundary, e),
        "O_c": orientation_class(e.theta),
        "M_c": margin_class(region.boundary, raster),
        "R_ellipse": radius,
        "P_ellipse": perimeter,
        "A_r": area,
        "CP_ellipse": compactness,
    }

    rows, cols = region.mask.shape
    blocks: list[tuple[str, ImageGrid, np.ndarray, tuple[float, float]]] = []
    for key in NAMED_SUBBAND_KEYS:
        grid = wcps[key]
        if grid.shape != subbands[key].shape:
            raise ValueError(f"{key}: weighted grid dims differ from subband")
        roi = roi_to_subband(region.mask, grid.shape)
        blocks.append((key, grid, roi, (grid.width / cols, grid.height / rows)))
    if include_bmode:
        blocks.append(("BMODE", case.bmode, region.mask, (1.0, 1.0)))

    ordered: dict[str, float] = {}
    for key, grid, roi, scale in blocks:
        block = _intensity_block(grid, roi, region, scale, psd_axis, f"{case.case_id}/{key}")
        block.update(geometric)
        for name in FEATURE_NAMES:
            ordered[f"{key}.{name}"] = float(block[name])
    return FeatureVector(case_id=case.case_id, label=case.label, values=ordered)
