"""Independent oracles the tests compare the library against.

Everything here is deliberately written the slow, obvious way (explicit
loops, quadrature, textbook formulas) and shares no code with the
package.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import ellipe, i0


def inverse_gaussian_pdf(z: float, mu: float, lam: float) -> float:
    if z <= 0:
        return 0.0
    return math.sqrt(lam / (2 * math.pi * z**3)) * math.exp(
        -lam * (z - mu) ** 2 / (2 * mu**2 * z)
    )


def rician_pdf(r: float, nu: float, sigma2: float) -> float:
    if r < 0:
        return 0.0
    return (r / sigma2) * math.exp(-(r**2 + nu**2) / (2 * sigma2)) * i0(r * nu / sigma2)


def riig_pdf_quadrature(r: float, alpha: float, beta: float, delta: float) -> float:
    """RiIG density as a Rician mixed over an inverse Gaussian variance.

    Conditional on the mixing variance z, the amplitude is Rician with
    noncentrality beta*z and scale z; z follows IG(mu = delta/gamma,
    lambda = delta^2).
    """
    gamma = math.sqrt(alpha**2 - beta**2)
    mu, lam = delta / gamma, delta**2

    def integrand(z: float) -> float:
        return rician_pdf(r, beta * z, z) * inverse_gaussian_pdf(z, mu, lam)

    total, _ = quad(integrand, 0.0, np.inf, limit=400)
    return total


def ellipse_perimeter_exact(a: float, b: float) -> float:
    """Complete-elliptic-integral perimeter."""
    big, small = max(a, b), min(a, b)
    m = 1.0 - (small / big) ** 2
    return 4.0 * big * ellipe(m)


def sobel_mean_brute(data: np.ndarray, roi: np.ndarray) -> float:
    """Per-pixel 3x3 Sobel magnitude, explicit loops, interior ROI only."""
    acc = []
    rows, cols = data.shape
    for i in range(1, rows - 1):
        for j in range(1, cols - 1):
            if not roi[i, j]:
                continue
            gx = (
                data[i - 1, j + 1] + 2 * data[i, j + 1] + data[i + 1, j + 1]
                - data[i - 1, j - 1] - 2 * data[i, j - 1] - data[i + 1, j - 1]
            )
            gy = (
                data[i + 1, j - 1] + 2 * data[i + 1, j] + data[i + 1, j + 1]
                - data[i - 1, j - 1] - 2 * data[i - 1, j] - data[i - 1, j + 1]
            )
            acc.append(math.hypot(gx, gy))
    if not acc:
        raise ValueError("no interior ROI pixel")
    return float(np.mean(acc))


def periodogram_peak(segment: np.ndarray) -> float:
    """Frequency of the largest FFT periodogram bin, DC excluded."""
    seg = np.asarray(segment, float)
    seg = seg - seg.mean()
    power = np.abs(np.fft.rfft(seg)) ** 2
    freqs = np.fft.rfftfreq(seg.size)
    power[0] = 0.0
    return float(freqs[int(np.argmax(power))])


def elementwise_product_loops(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty_like(a, dtype=float)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            out[i, j] = a[i, j] * b[i, j]
    return out


def ks_statistic_brute(samples: np.ndarray, cdf_values: np.ndarray) -> float:
    """Two-sided sup distance given model cdf values at the sorted samples."""
    srt = np.sort(samples)
    n = srt.size
    worst = 0.0
    for i in range(n):
        hi = (i + 1) / n - cdf_values[i]
        lo = cdf_values[i] - i / n
        worst = max(worst, hi, lo)
    return worst


def kl_divergence_loops(
    p_emp: np.ndarray, p_model: np.ndarray, widths: np.ndarray
) -> float:
    """Riemann-sum relative entropy in bits, explicit loop."""
    total = 0.0
    for p, q, w in zip(p_emp, p_model, widths):
        if p > 0:
            total += p * math.log2(p / q) * w
    return total


def windowed_mean_brute(data: np.ndarray, window: int) -> np.ndarray:
    """Replicate-padded sliding-window mean, explicit loops."""
    half = window // 2
    rows, cols = data.shape
    out = np.empty_like(data, dtype=float)
    for i in range(rows):
        for j in range(cols):
            acc = 0.0
            for di in range(-half, half + 1):
                for dj in range(-half, half + 1):
                    ii = min(max(i + di, 0), rows - 1)
                    jj = min(max(j + dj, 0), cols - 1)
                    acc += data[ii, jj]
            out[i, j] = acc / (window * window)
    return out


def otsu_brute(values: np.ndarray) -> int:
    """Exhaustive between-class-variance maximization over u8 thresholds."""
    hist = np.bincount(values.astype(int).ravel(), minlength=256).astype(float)
    n = hist.sum()
    best_t, best_sigma = None, -1.0
    for t in range(256):
        w0 = hist[: t + 1].sum()
        w1 = n - w0
        if w0 == 0 or w1 == 0:
            continue
        mu0 = (np.arange(t + 1) * hist[: t + 1]).sum() / w0
        mu1 = (np.arange(t + 1, 256) * hist[t + 1 :]).sum() / w1
        sigma = w0 * w1 * (mu0 - mu1) ** 2
        if sigma > best_sigma:
            best_sigma, best_t = sigma, t
    if best_t is None:
        raise ValueError("no threshold separates the histogram")
    return best_t
