"""Lesion segmentation: thresholding, Moore-neighbor boundary tracing, and
moment-based ellipse fitting.

Coordinates follow image convention: a pixel is addressed (x, y) with x
the column and y the row, y growing downward; arrays index [y, x].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_opening, label

from .imagecore import ImageGrid

__all__ = [
    "LesionRegion",
    "TiltedEllipse",
    "binarize",
    "fit_ellipse",
    "region_from_mask",
    "trace_boundary",
]


@dataclass(frozen=True)
class TiltedEllipse:
    """Best-fit tilted ellipse: center (x0, y0), semi-axes a (along theta)
    and b (perpendicular), orientation theta in [0, 2*pi)."""

    center: tuple[float, float]
    a: float
    b: float
    theta: float

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ValueError("semi-axes must be positive")
        if not 0 <= self.theta < 2 * math.pi:
            raise ValueError("theta must lie in [0, 2*pi)")

    def radius_along(self, direction: float) -> float:
        """Center-to-boundary distance along an absolute direction angle."""
        rel = direction - self.theta
        return 1.0 / math.hypot(math.cos(rel) / self.a, math.sin(rel) / self.b)


@dataclass(frozen=True)
class LesionRegion:
    """Single-component lesion mask with its traced boundary and ellipse."""

    mask: np.ndarray
    boundary: list[tuple[int, int]]
    ellipse: TiltedEllipse

    def __post_init__(self) -> None:
        if self.mask.dtype != bool or self.mask.ndim != 2:
            raise ValueError("mask must be a 2-D boolean grid")
        if not self.boundary:
            raise ValueError("boundary must be nonempty")


_EIGHT = np.ones((3, 3), dtype=int)


def _otsu_threshold(values: np.ndarray) -> int:
    """Otsu's threshold on 8-bit data; foreground is values > t."""
    hist = np.bincount(values.ravel().astype(np.int64), minlength=256).astype(float)
    total = hist.sum()
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(256)) / total
    mu_total = mu[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma_b = (mu_total * omega - mu) ** 2 / (omega * (1.0 - omega))
    sigma_b = np.nan_to_num(sigma_b[:-1], nan=-1.0, posinf=-1.0)
    if np.all(sigma_b <= 0):
        raise ValueError("no lesion candidate")
    return int(np.argmax(sigma_b))


def binarize(img: ImageGrid) -> np.ndarray:
    """Largest dark-component lesion candidate of a raw-u8 image.

    The image is inverted (lesions are hypoechoic), thresholded by Otsu's
    method, cleaned by a 3x3 morphological opening, and reduced to one
    component.  Components touching the bottom image row are dropped when
    any other candidate exists: posterior acoustic shadows trail dark
    columns to the bottom edge, lesions rarely do.
    """
    if img.value_domain != "raw-u8":
        raise ValueError(f"binarize needs raw-u8 input, got {img.value_domain}")
    inverted = 255.0 - img.data
    t = _otsu_threshold(inverted)
    binary = inverted > t
    opened = binary_opening(binary, structure=_EIGHT)
    labels, count = label(opened, structure=_EIGHT)
    if count == 0:
        raise ValueError("no lesion candidate")
    candidates = set(range(1, count + 1))
    shadows = set(np.unique(labels[-1, :])) - {0}
    if candidates - shadows:
        candidates -= shadows
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    best = min(candidates, key=lambda c: (-sizes[c], c))
    return labels == best


# Moore neighborhood in clockwise order (y grows downward), starting west.
_CLOCKWISE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))


def _foreground(mask: np.ndarray, x: int, y: int) -> bool:
    return 0 <= y < mask.shape[0] and 0 <= x < mask.shape[1] and bool(mask[y, x])


def _advance(
    mask: np.ndarray, p: tuple[int, int], b: tuple[int, int]
) -> tuple[tuple[int, int] | None, tuple[int, int]]:
    """Scan the Moore neighborhood of p clockwise starting after b.

    Returns the first foreground neighbor and the backtrack position (the
    last background pixel examined before it, b itself if none were)."""
    i = _CLOCKWISE.index((b[0] - p[0], b[1] - p[1]))
    back = b
    for step in range(1, 9):
        dx, dy = _CLOCKWISE[(i + step) % 8]
        q = (p[0] + dx, p[1] + dy)
        if _foreground(mask, q[0], q[1]):
            return q, back
        back = q
    return None, back


def trace_boundary(mask: np.ndarray) -> list[tuple[int, int]]:
    """Clockwise Moore-neighbor boundary chain of the mask component.

    Starts at the topmost-leftmost foreground pixel, entered from the
    west; stops on re-entering the start from the original direction
    (Jacob's criterion), operationalized as: the pixel that would follow
    the start equals the second pixel of the walk.  Thin structures are
    traversed out and back, so pixels may appear twice.
    """
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        raise ValueError("empty mask")
    first = np.lexsort((xs, ys))[0]
    start = (int(xs[first]), int(ys[first]))

    initial_back = (start[0] - 1, start[1])
    walk = [start]
    p, b = start, initial_back
    for _ in range(4 * ys.size + 8):
        nxt, back = _advance(mask, p, b)
        if nxt is None:
            return walk
        if nxt == start:
            follow, _ = _advance(mask, start, back)
            if follow == walk[1]:
                return walk
        walk.append(nxt)
        p, b = nxt, back
    raise RuntimeError("boundary tracing did not close; is the mask one component?")


def fit_ellipse(mask: np.ndarray) -> TiltedEllipse:
    """Equivalent ellipse of the mask: centroid plus axes/angle from the
    eigendecomposition of the pixel-coordinate covariance, scaled so a
    filled ellipse recovers its own semi-axes (factor 2*sqrt(eigenvalue))."""
    mask = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(mask)
    if ys.size < 5:
        raise ValueError("degenerate region")
    x = xs.astype(float)
    y = ys.astype(float)
    x0, y0 = float(x.mean()), float(y.mean())
    dx, dy = x - x0, y - y0
    mxx = float((dx * dx).mean())
    myy = float((dy * dy).mean())
    mxy = float((dx * dy).mean())

    half_trace = (mxx + myy) / 2.0
    spread = math.hypot((mxx - myy) / 2.0, mxy)
    lam1 = half_trace + spread
    lam2 = half_trace - spread
    if lam2 <= 1e-9:
        raise ValueError("degenerate region")
    theta = 0.5 * math.atan2(2.0 * mxy, mxx - myy) % (2.0 * math.pi)
    return TiltedEllipse(
        center=(x0, y0),
        a=2.0 * math.sqrt(lam1),
        b=2.0 * math.sqrt(lam2),
        theta=theta,
    )


def region_from_mask(mask: np.ndarray) -> LesionRegion:
    """Bundle a single-component mask with its boundary and ellipse."""
    mask = np.asarray(mask, dtype=bool)
    _, count = label(mask, structure=_EIGHT)
    if count != 1:
        raise ValueError(f"mask must have exactly one component, found {count}")
    return LesionRegion(
        mask=mask, boundary=trace_boundary(mask), ellipse=fit_ellipse(mask)
    )
