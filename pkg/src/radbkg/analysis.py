"""Spectrum reductions and the two scaling-law fits (power law in thickness,
exponential in elevation)."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .deposition import DepositSpectrum
from .rate_model import RateTriple

M_THRESHOLD_KEV = 1000.0


def spectrum_to_rates(spec: DepositSpectrum, threshold_kev: float = M_THRESHOLD_KEV) -> RateTriple:
    """(R, P, M) of a spectrum.

    A bin counts toward M iff its lower edge is >= threshold. P uses bin
    centres; overflow events enter R and M, and P at the top edge. Underflow
    events (below the first edge, still > 0) count in R only.
    """
    if not spec.live_time_s > 0:
        raise ValueError("live time must be positive")
    t = spec.live_time_s
    lo = spec.edges[:-1]
    r = (spec.counts.sum() + spec.overflow + spec.underflow) / t
    above = spec.counts[lo >= threshold_kev].sum()
    if spec.edges[-1] >= threshold_kev:
        above += spec.overflow
    p = (np.dot(spec.centers, spec.counts) + spec.edges[-1] * spec.overflow) / t
    return RateTriple(float(r), float(p), float(above / t))


def power_quantization_bound(spec: DepositSpectrum) -> float:
    """Upper bound on |P(bin centres) - P(exact)| for events inside the binning.

    Half the widest occupied bin times the binned rate, plus the first edge
    times the underflow rate (underflow carries no power). Overflow events are
    not bounded: their true energies are unknown.
    """
    occupied = spec.counts > 0
    half = 0.5 * np.diff(spec.edges)[occupied].max() if occupied.any() else 0.0
    return float((half * spec.counts.sum() + spec.edges[0] * spec.underflow) / spec.live_time_s)


def exact_power(spec: DepositSpectrum) -> float:
    """P from retained per-event deposits (requires ``keep_events``)."""
    if spec.events is None:
        raise ValueError("spectrum carries no per-event deposits")
    e, w = spec.events
    return float(np.dot(e, w) / spec.live_time_s)


@dataclass
class FitResult:
    """Outcome of a scaling-law fit. ``diverged`` marks a degenerate fit whose
    natural parameter (e.g. scale height of a flat series) is infinite."""

    model: str
    parameters: dict[str, float | None]
    residual: float
    n_points: int
    covariance: list[list[float]] | None = None
    diverged: bool = False
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, allow_nan=False, default=float)


def _points(points, need_positive_x: bool):
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (x, y) pairs")
    if pts.shape[0] < 3:
        raise ValueError("at least 3 points are needed")
    x, y = pts[:, 0], pts[:, 1]
    if np.unique(x).size < 2:
        raise ValueError("need at least two distinct x values")
    if np.any(y <= 0) or (need_positive_x and np.any(x <= 0)):
        raise ValueError("values must be positive")
    return x, y


def _wls(design, y, w):
    """Weighted least squares; returns (coef, covariance, rms residual)."""
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    resid = y - design @ coef
    dof = max(len(y) - design.shape[1], 1)
    a = design.T @ (design * w[:, None])
    cov = np.linalg.inv(a) * float(np.sum(w * resid**2) / dof)
    return coef, cov, float(np.sqrt(np.mean(resid**2)))


def fit_power_law(points, *, counts=None) -> FitResult:
    """Fit y = A x^k by least squares in log-log space.

    With ``counts`` (events behind each y) the fit is Poisson-weighted: the
    variance of log y is taken as 1/count.
    """
    x, y = _points(points, need_positive_x=True)
    w = np.ones_like(y) if counts is None else np.asarray(counts, dtype=float)
    design = np.column_stack([np.ones_like(x), np.log(x)])
    coef, cov, rms = _wls(design, np.log(y), w)
    return FitResult("power_law", {"amplitude": float(math.exp(coef[0])), "exponent": float(coef[1])},
                     rms, len(x), cov.tolist())


def fit_exponential(points, *, counts=None, flat_tolerance: float = 1e-12) -> FitResult:
    """Fit rate = r0 exp(H / lambda) by least squares on (H, log rate).

    A slope indistinguishable from zero reports ``diverged`` with lambda None.
    """
    x, y = _points(points, need_positive_x=False)
    w = np.ones_like(y) if counts is None else np.asarray(counts, dtype=float)
    design = np.column_stack([np.ones_like(x), x])
    coef, cov, rms = _wls(design, np.log(y), w)
    r0 = float(math.exp(coef[0]))
    slope = float(coef[1])
    if abs(slope) * float(np.ptp(x)) <= flat_tolerance:
        return FitResult("exponential", {"rate0": r0, "scale_height": None, "slope": slope},
                         rms, len(x), cov.tolist(), diverged=True)
    return FitResult("exponential", {"rate0": r0, "scale_height": 1.0 / slope, "slope": slope},
                     rms, len(x), cov.tolist(), extra={"scale_height_sigma": float(math.sqrt(cov[1, 1])) / slope**2})


def fit_linear(points, *, sigma=None) -> FitResult:
    """Fit y = c + g x. With per-point ``sigma`` the fit is chi-square weighted
    and the covariance is the standard (unscaled) one."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("at least 3 points are needed")
    x, y = pts[:, 0], pts[:, 1]
    design = np.column_stack([np.ones_like(x), x])
    if sigma is None:
        coef, cov, rms = _wls(design, y, np.ones_like(y))
    else:
        w = 1.0 / np.asarray(sigma, dtype=float) ** 2
        coef, _, rms = _wls(design, y, w)
        cov = np.linalg.inv(design.T @ (design * w[:, None]))
    err = np.sqrt(np.diag(cov))
    return FitResult("linear", {"intercept": float(coef[0]), "slope": float(coef[1])}, rms, len(x), cov.tolist(),
                     extra={"intercept_sigma": float(err[0]), "slope_sigma": float(err[1])})


def event_rate_uncertainty(spec: DepositSpectrum) -> float:
    """Statistical error of R from the sum of squared weights.

    Assumes independent events; with several re-aims per stage-1 history use
    :func:`batch_uncertainty` over independent chunks instead.
    """
    return float(math.sqrt(spec.sumw2.sum() + spec.overflow + spec.underflow) / spec.live_time_s)


def batch_uncertainty(chunks, quantity: str = "R", threshold_kev: float = M_THRESHOLD_KEV) -> tuple[float, float]:
    """(value, standard error) of R, P or M from independent chunk spectra.

    Batch means weighted by live time; valid however events within a chunk
    are correlated.
    """
    if len(chunks) < 2:
        raise ValueError("need at least two independent chunks")
    t = np.array([c.live_time_s for c in chunks])
    r = np.array([getattr(spectrum_to_rates(c, threshold_kev), quantity) for c in chunks])
    mean = float(np.dot(t, r) / t.sum())
    n = len(chunks)
    var = float(np.sum(t**2 * (r - mean) ** 2) / t.sum() ** 2 * n / (n - 1))
    return mean, math.sqrt(var)
