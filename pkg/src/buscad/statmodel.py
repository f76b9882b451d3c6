"""Rician inverse Gaussian (RiIG) and Nakagami amplitude models.

The RiIG density is the marginal of a Rician amplitude whose underlying
variance is inverse-Gaussian distributed; its Bessel-K factor has
half-integer order and is evaluated in closed form.  Everything works in
log space so large shape arguments cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize
from scipy.special import gammaln, i0e

__all__ = [
    "NakagamiParams",
    "RiIGParams",
    "fit_nakagami",
    "fit_riig",
    "histogram_density",
    "kl_divergence",
    "ks_statistic",
    "nakagami_pdf",
    "pp_transform",
    "riig_cdf",
    "riig_loglik",
    "riig_moment_estimate",
    "riig_pdf",
    "riig_sample",
]

_BOUND_LO = 1e-3
_BOUND_HI = 1e3
_BETA_CAP = 0.95  # |beta| kept at most this fraction of alpha during fits


@dataclass(frozen=True)
class RiIGParams:
    """RiIG parameters: steepness alpha, skewness beta, dispersion delta."""

    alpha: float
    beta: float
    delta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not abs(self.beta) < self.alpha:
            raise ValueError(
                f"|beta| must be below alpha, got beta={self.beta}, "
                f"alpha={self.alpha}"
            )

    @property
    def gamma(self) -> float:
        return math.sqrt(self.alpha**2 - self.beta**2)


@dataclass(frozen=True)
class NakagamiParams:
    """Nakagami-m parameters: shape m >= 0.5 and scale omega = E[r^2]."""

    m: float
    omega: float

    def __post_init__(self) -> None:
        if not (self.m >= 0.5 and np.isfinite(self.m)):
            raise ValueError(f"m must be at least 0.5, got {self.m}")
        if not (self.omega > 0 and np.isfinite(self.omega)):
            raise ValueError(f"omega must be positive, got {self.omega}")


def _riig_logpdf(r: np.ndarray, alpha: float, beta: float, delta: float) -> np.ndarray:
    """log density at r > 0.

    With s = sqrt(delta^2 + r^2) and the closed-form half-integer Bessel-K,
    the density reduces to

        alpha * delta * exp(delta*gamma) * r / s^2
        * (1 + 1/(alpha*s)) * exp(-alpha*s) * I0(beta*r).

    I0 is evaluated through its exponentially scaled form to stay finite.
    """
    gamma = math.sqrt(alpha**2 - beta**2)
    s = np.hypot(delta, r)
    br = beta * r
    return (
        math.log(alpha)
        + math.log(delta)
        + delta * gamma
        + np.log(r)
        - 2.0 * np.log(s)
        + np.log1p(1.0 / (alpha * s))
        - alpha * s
        + np.abs(br)
        + np.log(i0e(br))
    )


def riig_pdf(r, params: RiIGParams):
    """RiIG amplitude density, elementwise over r >= 0 (0 at r = 0)."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("amplitudes must be nonnegative")
    out = np.zeros_like(arr, dtype=float)
    pos = arr > 0
    if np.any(pos):
        out[pos] = np.exp(
            _riig_logpdf(arr[pos], params.alpha, params.beta, params.delta)
        )
    return float(out) if np.isscalar(r) else out


def nakagami_pdf(r, params: NakagamiParams):
    """Nakagami-m density 2 m^m r^(2m-1) exp(-m r^2/omega) / (Gamma(m) omega^m)."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("amplitudes must be nonnegative")
    m, omega = params.m, params.omega
    logc = math.log(2.0) + m * math.log(m / omega) - gammaln(m)
    out = np.zeros_like(arr, dtype=float)
    pos = arr > 0
    out[pos] = np.exp(logc + (2 * m - 1) * np.log(arr[pos]) - m * arr[pos] ** 2 / omega)
    if not np.isscalar(r):
        out[~pos] = 0.0 if m > 0.5 else math.exp(logc)
        return out
    if arr > 0:
        return float(out)
    return 0.0 if m > 0.5 else math.exp(logc)


def riig_sample(params: RiIGParams, n: int, seed) -> np.ndarray:
    """Draw n i.i.d. RiIG amplitudes, deterministic for a fixed seed.

    Samples the inverse-Gaussian mixing variance z (Michael, Schucany and
    Haas transformation method), then a Rician amplitude with location
    beta*z and per-component variance z.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    mu = params.delta / params.gamma
    lam = params.delta**2

    y = rng.standard_normal(n) ** 2
    x = mu + mu * mu * y / (2 * lam) - (mu / (2 * lam)) * np.sqrt(
        4 * mu * lam * y + (mu * y) ** 2
    )
    x = np.maximum(x, np.finfo(float).tiny)
    z = np.where(rng.random(n) <= mu / (mu + x), x, mu * mu / x)

    root = np.sqrt(z)
    return np.hypot(
        params.beta * z + root * rng.standard_normal(n),
        root * rng.standard_normal(n),
    )


def riig_loglik(samples: np.ndarray, params: RiIGParams) -> float:
    """Sum of log densities; samples must be strictly positive."""
    arr = np.asarray(samples, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("log-likelihood requires strictly positive amplitudes")
    return float(
        np.sum(_riig_logpdf(arr, params.alpha, params.beta, params.delta))
    )


def riig_moment_estimate(samples: np.ndarray) -> RiIGParams:
    """Closed-form symmetric (beta = 0) estimate matching mean and variance
    of the squared amplitude:

        E[r^2] = 2 delta / alpha
        Var[r^2] = 8 delta / alpha^3 + 4 delta^2 / alpha^2

    Used directly for window-local parametric maps and as the optimizer
    start for the full fit.  Parameters are clamped to the fit bounds.
    """
    arr = np.asarray(samples, dtype=float)
    sq = arr**2
    m2 = float(sq.mean())
    v = float(sq.var())
    if m2 <= 0 or v <= 0:
        raise ValueError("degenerate sample")
    excess = v - m2 * m2
    if excess > 0:
        alpha = 2.0 * math.sqrt(m2 / excess)
    else:
        alpha = _BOUND_HI
    alpha = min(max(alpha, _BOUND_LO), _BOUND_HI)
    delta = min(max(alpha * m2 / 2.0, _BOUND_LO), _BOUND_HI)
    return RiIGParams(alpha=alpha, beta=0.0, delta=delta)


def _positive_samples(samples, minimum: int) -> np.ndarray:
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1:
        arr = arr.ravel()
    if np.any(arr < 0):
        raise ValueError("amplitudes must be nonnegative")
    if arr.size and np.var(arr) == 0:
        raise ValueError("degenerate sample")
    arr = arr[arr > 0]
    if arr.size < minimum:
        raise ValueError(
            f"need at least {minimum} positive samples, got {arr.size}"
        )
    if np.var(arr) == 0:
        raise ValueError("degenerate sample")
    return arr


def fit_riig(samples) -> RiIGParams:
    """Maximum-likelihood RiIG fit.

    Nelder-Mead on (log alpha, atanh-scaled beta, log delta) from the
    moment start; the returned parameters never score below the start.
    Zero amplitudes carry no likelihood information (density vanishes at
    the origin) and are dropped before fitting.
    """
    arr = _positive_samples(samples, 30)
    start = riig_moment_estimate(arr)

    lo, hi = math.log(_BOUND_LO), math.log(_BOUND_HI)

    def unpack(t: np.ndarray) -> tuple[float, float, float]:
        a = math.exp(min(max(t[0], lo), hi))
        d = math.exp(min(max(t[2], lo), hi))
        b = _BETA_CAP * a * math.tanh(t[1])
        return a, b, d

    def neg_loglik(t: np.ndarray) -> float:
        a, b, d = unpack(t)
        ll = float(np.sum(_riig_logpdf(arr, a, b, d)))
        penalty = sum(
            max(lo - v, 0.0) ** 2 + max(v - hi, 0.0) ** 2 for v in (t[0], t[2])
        )
        return -ll + 100.0 * penalty

    t0 = np.array([math.log(start.alpha), 0.0, math.log(start.delta)])
    res = minimize(neg_loglik, t0, method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-6, "maxiter": 2000})
    a, b, d = unpack(res.x)
    fitted = RiIGParams(alpha=a, beta=b, delta=d)
    if riig_loglik(arr, fitted) < riig_loglik(arr, start):
        return start
    return fitted


def fit_nakagami(samples) -> NakagamiParams:
    """Moment estimator: omega = mean(r^2), m = omega^2 / var(r^2),
    with m clamped to the conventional 0.5 lower bound."""
    arr = np.asarray(samples, dtype=float).ravel()
    if np.any(arr < 0):
        raise ValueError("amplitudes must be nonnegative")
    if arr.size < 30:
        raise ValueError(f"need at least 30 samples, got {arr.size}")
    sq = arr**2
    v = float(sq.var())
    if v == 0:
        raise ValueError("degenerate sample")
    omega = float(sq.mean())
    return NakagamiParams(m=max(omega * omega / v, 0.5), omega=omega)


def riig_cdf(r, params: RiIGParams, grid_points: int = 4096):
    """Numerical RiIG cdf via trapezoidal integration on a uniform grid."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("amplitudes must be nonnegative")
    top = float(arr.max()) if arr.size else 0.0
    if top == 0.0:
        out = np.zeros_like(arr)
        return float(out) if np.isscalar(r) else out
    grid = np.linspace(0.0, top, grid_points)
    dens = riig_pdf(grid, params)
    cum = cumulative_trapezoid(dens, grid, initial=0.0)
    out = np.interp(arr, grid, cum)
    return float(out) if np.isscalar(r) else out


def ks_statistic(samples, model_cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Exact sup distance between an empirical step cdf and a model cdf,
    checking both one-sided limits at every step."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("need at least one sample")
    n = x.size
    f = np.asarray(model_cdf(x), dtype=float)
    steps = np.arange(n + 1) / n
    return float(max((steps[1:] - f).max(), (f - steps[:-1]).max()))


def pp_transform(f):
    """Variance-stabilizing probability transform (2/pi) arcsin(sqrt(F))."""
    arr = np.asarray(f, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    out = (2.0 / math.pi) * np.arcsin(np.sqrt(arr))
    return float(out) if np.isscalar(f) else out


def histogram_density(samples, bins: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width histogram density on [0, max sample]; returns
    (densities, bin edges)."""
    arr = np.asarray(samples, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("need at least one sample")
    if np.any(arr < 0):
        raise ValueError("amplitudes must be nonnegative")
    top = float(arr.max())
    if top <= 0:
        raise ValueError("degenerate sample")
    edges = np.linspace(0.0, top, bins + 1)
    dens, _ = np.histogram(arr, bins=edges, density=True)
    return dens, edges


def kl_divergence(
    p_emp: Sequence[float],
    p_model: Callable[[np.ndarray], np.ndarray],
    edges: Sequence[float],
    epsilon_floor: bool = False,
) -> float:
    """Riemann-sum Kullback-Leibler divergence in bits.

    p_emp holds histogram densities over the bins bounded by edges; the
    model density is evaluated at bin centers.  Empty bins contribute
    nothing.  A model density of zero under an occupied bin violates
    absolute continuity and raises, unless epsilon_floor substitutes a
    1e-300 floor.
    """
    p = np.asarray(p_emp, dtype=float)
    e = np.asarray(edges, dtype=float)
    if e.size != p.size + 1:
        raise ValueError("edges must bound every histogram bin")
    if np.any(p < 0):
        raise ValueError("densities must be nonnegative")
    widths = np.diff(e)
    total = float(np.sum(p * widths))
    if abs(total - 1.0) > 1e-3:
        raise ValueError(f"empirical density integrates to {total}, not 1")
    centers = (e[:-1] + e[1:]) / 2.0
    q = np.asarray(p_model(centers), dtype=float)
    occupied = p > 0
    if np.any(q[occupied] <= 0):
        if not epsilon_floor:
            raise ValueError("absolute-continuity violation")
        q = np.maximum(q, 1e-300)
    ratio = np.log2(p[occupied] / q[occupied])
    return float(np.sum(p[occupied] * ratio * widths[occupied]))
