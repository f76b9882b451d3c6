"""Image rasters, file I/O, despeckling, and intensity normalization.

Every image in the pipeline is an :class:`ImageGrid`: a 2-D float64 raster
tagged with the domain its values live in (raw 8-bit pixels, standardized
intensities, transform coefficients, or fitted parameter maps).  All
operations here are pure functions; none mutate their inputs.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

logger = logging.getLogger(__name__)

VALUE_DOMAINS = ("raw-u8", "standardized", "coefficient", "parameter-map")

RASTER_MAGIC = b"WCPG"
_RASTER_HEADER = struct.Struct("<4sII")


class ImageGrid:
    """2-D real-valued raster with a value-domain tag.

    data is always float64, C-contiguous (row-major), shape (height, width).
    """

    __slots__ = ("data", "value_domain")

    def __init__(self, data: np.ndarray, value_domain: str = "coefficient"):
        arr = np.ascontiguousarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"image data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image dimensions must be at least 1x1")
        if value_domain not in VALUE_DOMAINS:
            raise ValueError(f"unknown value domain {value_domain!r}")
        if value_domain == "raw-u8":
            if not np.isfinite(arr).all():
                raise ValueError("raw-u8 image contains non-finite values")
            if (arr < 0).any() or (arr > 255).any() or (arr != np.floor(arr)).any():
                raise ValueError("raw-u8 image must hold integers in [0, 255]")
        self.data = arr
        self.value_domain = value_domain

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"ImageGrid({self.width}x{self.height}, {self.value_domain})"


@dataclass(frozen=True)
class DespeckleConfig:
    """Despeckling selector.

    method 'lee' is a local-statistics linear MMSE filter for multiplicative
    noise; 'median' a plain median filter; 'none' passes through.
    noise_cov is the squared coefficient of variation of the multiplicative
    noise; when None it is estimated from the image (median of local
    var/mean^2).
    """

    method: str = "lee"
    window: int = 7
    noise_cov: float | None = None

    def __post_init__(self) -> None:
        if self.method not in ("lee", "median", "none"):
            raise ValueError(f"unknown despeckle method {self.method!r}")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("despeckle window must be odd and >= 3")


def load_image(path: str | Path) -> ImageGrid:
    """Load an 8-bit grayscale or RGB PNG/BMP as a raw-u8 grid.

    RGB collapses to grayscale by the channel mean (rounded half away from
    zero); higher bit depths are rejected.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.float64)
            elif im.mode in ("RGB", "RGBA", "P", "LA"):
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
                arr = np.floor(rgb.mean(axis=2) + 0.5)
            else:
                raise ValueError(
                    f"unsupported bit depth or mode {im.mode!r} in {path.name}"
                )
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"unreadable file: {path}") from exc
    return ImageGrid(arr, "raw-u8")


def save_image(img: ImageGrid, path: str | Path) -> None:
    """Write a raw-u8 grid as PNG or BMP (by file suffix)."""
    if img.value_domain != "raw-u8":
        raise ValueError("save_image requires a raw-u8 grid")
    Image.fromarray(img.data.astype(np.uint8), mode="L").save(Path(path))


def write_raster(img: ImageGrid, path: str | Path) -> None:
    """Persist any grid as the binary raster format.

    Layout: magic "WCPG", u32 width, u32 height, little-endian f64 payload
    in row-major order.
    """
    with open(path, "wb") as fh:
        fh.write(_RASTER_HEADER.pack(RASTER_MAGIC, img.width, img.height))
        fh.write(img.data.astype("<f8").tobytes())


def read_raster(path: str | Path, value_domain: str = "coefficient") -> ImageGrid:
    """Read a grid written by :func:`write_raster`."""
    blob = Path(path).read_bytes()
    if len(blob) < _RASTER_HEADER.size:
        raise ValueError(f"unreadable file: {path} (truncated header)")
    magic, width, height = _RASTER_HEADER.unpack_from(blob)
    if magic != RASTER_MAGIC:
        raise ValueError(f"unreadable file: {path} (bad magic {magic!r})")
    payload = blob[_RASTER_HEADER.size :]
    expected = width * height * 8
    if len(payload) != expected:
        raise ValueError(
            f"unreadable file: {path} (payload {len(payload)}B, expected {expected}B)"
        )
    data = np.frombuffer(payload, dtype="<f8").reshape(height, width)
    return ImageGrid(data, value_domain)


def despeckle(img: ImageGrid, config: DespeckleConfig | None = None) -> ImageGrid:
    """Reduce speckle on a raw-u8 image; output stays raw-u8.

    Lee filtering weights each pixel between its local mean and itself by
    the excess of local variance over the expected multiplicative-noise
    variance, so homogeneous-region variance can only shrink.
    """
    config = config or DespeckleConfig()
    if img.value_domain != "raw-u8":
        raise ValueError("despeckle requires a raw-u8 grid")
    if config.window > min(img.height, img.width):
        raise ValueError(
            f"despeckle window {config.window} larger than image {img.height}x{img.width}"
        )
    x = img.data
    if config.method == "none":
        return ImageGrid(x.copy(), "raw-u8")
    if config.method == "median":
        out = ndimage.median_filter(x, size=config.window, mode="reflect")
        return ImageGrid(out, "raw-u8")

    mean = ndimage.uniform_filter(x, size=config.window, mode="reflect")
    sq_mean = ndimage.uniform_filter(x * x, size=config.window, mode="reflect")
    var = np.maximum(sq_mean - mean * mean, 0.0)
    if config.noise_cov is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(mean > 0, var / np.maximum(mean, 1e-12) ** 2, 0.0)
        noise_cov = float(np.median(ratio))
    else:
        noise_cov = float(config.noise_cov)
    noise_var = noise_cov * mean * mean
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(var > 0, np.maximum(var - noise_var, 0.0) / var, 0.0)
    out = mean + weight * (x - mean)
    out = np.clip(np.floor(out + 0.5), 0.0, 255.0)
    return ImageGrid(out, "raw-u8")


def normalize(img: ImageGrid) -> ImageGrid:
    """Standardize, clip to [-3, 3], and remap to integer [0, 255].

    Standardization uses the population (1/N) standard deviation.  The
    linear remap is x -> round((x + 3)/6 * 255) with rounding half away
    from zero.  A zero-variance image maps every pixel to 128.
    """
    if img.value_domain != "raw-u8":
        raise ValueError("normalize requires a raw-u8 grid")
    x = img.data
    sd = float(x.std())
    if sd == 0.0:
        return ImageGrid(np.full_like(x, 128.0), "raw-u8")
    z = np.clip((x - x.mean()) / sd, -3.0, 3.0)
    y = np.floor((z + 3.0) * (255.0 / 6.0) + 0.5)  # values are >= 0 before rounding
    return ImageGrid(y, "raw-u8")
