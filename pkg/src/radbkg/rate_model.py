"""Closed-form event-rate model for a substrate in a shielded laboratory.

For each source s (five decay half-chains and cosmic rays) the model gives

    R_s = a_s (c_s + g_s tau)       events/s, any deposited energy
    P_s = a_s  p_s tau^beta_s       keV/s, deposited power
    M_s = a_s  m_s tau^alpha_s      events/s above 1 MeV

per 100 mm^2 of area, times the correction product kc * ksh * krho. Here
tau = t / 500 um and a_s is the source strength relative to nominal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .deposition import SubstrateSpec
from .materials import SILICON_DENSITY
from .sources import CHAIN_IDS, SPLIT_SCALE_HEIGHTS_M, EnvironmentSpec

SOURCE_IDS = CHAIN_IDS + ("CR",)
QUANTITIES = ("R", "P", "M")
REFERENCE_AREA_MM2 = 100.0
NOMINAL_CEILING_CM = 20.0
CEILING_LOSS_PER_10CM = 0.02
GALLIUM_CR_SLOPE = 7.0e-3
M_DENSITY_EXPONENT = 2.7
DEFAULT_SCALE_HEIGHT_M = 2000.0

# shape anchors: (side/top descriptor, kappa_R, kappa_P)
SHAPE_SQUARE = (0.2, 1.00, 1.00)
SHAPE_STRIP = (1.1, 1.20, 0.97)


@dataclass(frozen=True)
class SourceTerm:
    """Coefficients of one source at nominal strength and geometry."""

    c: float
    g: float
    p: float
    beta: float
    m: float
    alpha: float
    rho_ga: float | None = None

    def __post_init__(self):
        for name in ("c", "g", "p", "m"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.beta <= 0 or self.alpha <= 0:
            raise ValueError("exponents must be positive")


_TABLE = {
    #          c        g        p     beta   m       alpha  rho_Ga
    "K40":    (2.2e-3,  6.8e-3,  1.4,  1.12,  15e-6,  5.0,   2.0),
    "Th232a": (0.6e-3,  4.9e-3,  0.5,  1.12,  2e-6,   5.0,   4.0),
    "Th232b": (1.5e-3,  6.6e-3,  0.9,  1.12,  20e-6,  5.0,   4.0),
    "U238a":  (0.02e-3, 0.6e-3,  0.03, 1.12,  0.0,    5.0,   15.0),
    "U238b":  (1.9e-3,  11.7e-3, 1.4,  1.12,  13e-6,  5.0,   4.0),
    "CR":     (40e-3,   1.4e-3,  8.0,  1.0,   180e-6, 1.8,   None),
}


@dataclass(frozen=True)
class SourceParams:
    terms: dict[str, SourceTerm] = field(default_factory=lambda: {k: SourceTerm(*v) for k, v in _TABLE.items()})

    def __post_init__(self):
        if set(self.terms) != set(SOURCE_IDS):
            raise ValueError(f"parameters needed for exactly {SOURCE_IDS}")

    def __getitem__(self, source: str) -> SourceTerm:
        return self.terms[source]

    def with_term(self, source: str, **changes) -> "SourceParams":
        terms = dict(self.terms)
        terms[source] = replace(terms[source], **changes)
        return SourceParams(terms)

    def as_dict(self) -> dict:
        return {s: {k: getattr(t, k) for k in ("c", "g", "p", "beta", "m", "alpha", "rho_ga")}
                for s, t in self.terms.items()}


@dataclass(frozen=True)
class ScaleHeightModel:
    """Elevation scaling of the cosmic term.

    ``single``: exp(H / lambda_m). ``split``: weighted sum of exp(H / lambda_k)
    over the muon, nuclear and electromagnetic components.
    """

    mode: str = "single"
    lambda_m: float = DEFAULT_SCALE_HEIGHT_M
    split_heights_m: tuple[float, float, float] = SPLIT_SCALE_HEIGHTS_M
    # muon, nuclear, EM shares of the sea-level event rate; chosen so the
    # local scale height at sea level is close to the single-mode default
    split_weights: tuple[float, float, float] = (0.5, 0.3, 0.2)

    def __post_init__(self):
        if self.mode not in ("single", "split"):
            raise ValueError("scale-height mode must be 'single' or 'split'")
        if not self.lambda_m > 0 or min(self.split_heights_m) <= 0:
            raise ValueError("scale heights must be positive")
        if min(self.split_weights) < 0 or not math.isclose(sum(self.split_weights), 1.0, rel_tol=1e-9):
            raise ValueError("split weights must be nonnegative and sum to 1")

    def factor(self, elevation_m: float) -> float:
        if self.mode == "single":
            return math.exp(elevation_m / self.lambda_m)
        return sum(w * math.exp(elevation_m / h) for w, h in zip(self.split_weights, self.split_heights_m))


@dataclass(frozen=True)
class RateTriple:
    R: float
    P: float
    M: float

    def __post_init__(self):
        if min(self.R, self.P, self.M) < 0:
            raise ValueError("rates must be nonnegative")

    def __add__(self, other: "RateTriple") -> "RateTriple":
        return RateTriple(self.R + other.R, self.P + other.P, self.M + other.M)

    def scaled(self, k: float) -> "RateTriple":
        return RateTriple(self.R * k, self.P * k, self.M * k)

    def as_dict(self) -> dict:
        return {"R": self.R, "P": self.P, "M": self.M}


@dataclass(frozen=True)
class SourceBreakdown:
    source: str
    strength: float
    rates: RateTriple
    kappas: dict[str, tuple[float, float, float]]


def shape_factor(descriptor: float, quantity: str) -> float:
    """Linear in the side/top descriptor through the square and strip anchors."""
    if quantity == "M":
        return 1.0
    col = 1 if quantity == "R" else 2
    s0, s1 = SHAPE_SQUARE[0], SHAPE_STRIP[0]
    k0, k1 = SHAPE_SQUARE[col], SHAPE_STRIP[col]
    return max(0.0, k0 + (k1 - k0) * (descriptor - s0) / (s1 - s0))


def ceiling_factor(ceiling_cm: float) -> float:
    return (1.0 - CEILING_LOSS_PER_10CM) ** ((ceiling_cm - NOMINAL_CEILING_CM) / 10.0)


def correction_factors(substrate: SubstrateSpec, env: EnvironmentSpec, source: str, quantity: str,
                       params: SourceParams | None = None) -> tuple[float, float, float]:
    """(kappa_c, kappa_sh, kappa_rho) for one source and quantity.

    The gallium slope substitution for the cosmic R term is not a factor; it
    happens in :func:`source_rates`.
    """
    if source not in SOURCE_IDS:
        raise ValueError(f"unknown source {source!r}; known: {SOURCE_IDS}")
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    params = params or SourceParams()
    mat = substrate.material
    rel = mat.relative_density
    kc = ceiling_factor(env.ceiling_cm) if source == "CR" else 1.0
    ksh = shape_factor(substrate.shape_descriptor, quantity)
    if quantity == "M":
        krho = rel**M_DENSITY_EXPONENT
    elif source == "CR":
        krho = rel if quantity == "P" else 1.0
    elif mat.contains_gallium:
        krho = (mat.density + params[source].rho_ga) / SILICON_DENSITY
    else:
        krho = rel
    return kc, ksh, krho


def source_strength(source: str, env: EnvironmentSpec, scale: ScaleHeightModel) -> float:
    """Relative strength a_s: activity over nominal, or elevation factor for cosmic rays."""
    if source == "CR":
        return scale.factor(env.elevation_m)
    return env.relative_activity(source)


def eq1_terms(term: SourceTerm, tau: float) -> RateTriple:
    """Uncorrected (R, P, M) of one source at unit strength per 100 mm^2.

    M is capped at R: the steep power in tau has no meaning once it would
    exceed the total event rate.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    r = term.c + term.g * tau
    return RateTriple(r, term.p * tau**term.beta, min(term.m * tau**term.alpha, r))


def source_rates(substrate: SubstrateSpec, env: EnvironmentSpec, source: str,
                 params: SourceParams | None = None, scale: ScaleHeightModel | None = None) -> SourceBreakdown:
    params = params or SourceParams()
    scale = scale or ScaleHeightModel()
    term = params[source]
    if source == "CR" and substrate.material.contains_gallium:
        term = replace(term, g=GALLIUM_CR_SLOPE)
    tau = substrate.tau
    kappas = {q: correction_factors(substrate, env, source, q, params) for q in QUANTITIES}
    k = {q: math.prod(kappas[q]) for q in QUANTITIES}
    a = source_strength(source, env, scale)
    area = substrate.area_mm2 / REFERENCE_AREA_MM2
    r = (term.c + term.g * tau) * k["R"]
    p = term.p * tau**term.beta * k["P"]
    m = min(term.m * tau**term.alpha * k["M"], r)
    return SourceBreakdown(source, a, RateTriple(r, p, m).scaled(a * area), kappas)


def rate_breakdown(substrate: SubstrateSpec, env: EnvironmentSpec, params: SourceParams | None = None,
                   scale: ScaleHeightModel | None = None) -> list[SourceBreakdown]:
    return [source_rates(substrate, env, s, params, scale) for s in SOURCE_IDS]


def compute_rates(substrate: SubstrateSpec, env: EnvironmentSpec, params: SourceParams | None = None,
                  scale: ScaleHeightModel | None = None) -> RateTriple:
    """Total (R, P, M) summed over all sources, with corrections applied.

    Example:
        >>> round(compute_rates(SubstrateSpec.nominal(), EnvironmentSpec()).R, 5)
        0.07822
    """
    parts = rate_breakdown(substrate, env, params, scale)
    return RateTriple(*(math.fsum(getattr(b.rates, q) for b in parts) for q in QUANTITIES))


def thin_limit(env: EnvironmentSpec, params: SourceParams | None = None,
               scale: ScaleHeightModel | None = None, area_mm2: float = REFERENCE_AREA_MM2) -> RateTriple:
    """Rates of a nominal-shape Si substrate as thickness goes to zero."""
    params = params or SourceParams()
    scale = scale or ScaleHeightModel()
    total = RateTriple(0.0, 0.0, 0.0)
    for s in SOURCE_IDS:
        kc = ceiling_factor(env.ceiling_cm) if s == "CR" else 1.0
        a = source_strength(s, env, scale) * kc * area_mm2 / REFERENCE_AREA_MM2
        total = total + eq1_terms(params[s], 0.0).scaled(a)
    return total

