"""Primary particle generators: decay-chain gamma emission and ground-level cosmic rays."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .phasespace import PhaseSpace, PhaseSpaceRecord
from .physics import Species

CHAIN_IDS = ("K40", "Th232a", "Th232b", "U238a", "U238b")
NOMINAL_ACTIVITY = {"K40": 400.0, "Th232a": 30.0, "Th232b": 30.0, "U238a": 40.0, "U238b": 40.0}
MAX_CHAIN_ENERGY_KEV = 3000.0

MUON_SCALE_HEIGHT_M = 5000.0
NUCLEAR_SCALE_HEIGHT_M = 1000.0
EM_SCALE_HEIGHT_M = 2500.0
SPLIT_SCALE_HEIGHTS_M = (MUON_SCALE_HEIGHT_M, NUCLEAR_SCALE_HEIGHT_M, EM_SCALE_HEIGHT_M)


@dataclass(frozen=True, eq=False)
class DecayChain:
    """Gamma lines of one half-chain, per decay of its parent, in secular equilibrium."""

    id: str
    energies: np.ndarray
    intensities: np.ndarray
    isotopes: tuple[str, ...] = ()
    nominal_activity: float = 0.0

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        p = np.asarray(self.intensities, dtype=float)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "intensities", p)
        if e.shape != p.shape:
            raise ValueError("energies and intensities differ in length")
        if np.any((p <= 0) | (p > 1)):
            raise ValueError(f"{self.id}: emission probabilities must lie in (0, 1]")
        if np.any((e <= 0) | (e > MAX_CHAIN_ENERGY_KEV)):
            raise ValueError(f"{self.id}: line energies must lie in (0, {MAX_CHAIN_ENERGY_KEV:g}] keV")

    @property
    def photons_per_decay(self) -> float:
        return float(self.intensities.sum())


@functools.lru_cache(maxsize=None)
def load_chains() -> dict[str, DecayChain]:
    """The shipped line library, keyed by half-chain id."""
    text = (resources.files("radbkg") / "data" / "gamma_lines.csv").read_text()
    rows = [ln.split(",") for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if rows[0] != ["chain", "isotope", "energy_keV", "intensity"]:
        raise ValueError("gamma_lines.csv: unexpected column row")
    by_chain: dict[str, list] = {c: [] for c in CHAIN_IDS}
    for chain, iso, e, p in rows[1:]:
        by_chain[chain].append((iso, float(e), float(p)))
    return {
        c: DecayChain(
            id=c,
            energies=np.array([r[1] for r in lines]),
            intensities=np.array([r[2] for r in lines]),
            isotopes=tuple(r[0] for r in lines),
            nominal_activity=NOMINAL_ACTIVITY[c],
        )
        for c, lines in by_chain.items()
    }


def sample_decay_emission(chain: DecayChain, rng: np.random.Generator) -> list[float]:
    """Gamma energies (keV) emitted in one parent decay; each line fires independently."""
    if chain.energies.size == 0:
        raise ValueError(f"chain {chain.id} has no lines")
    fired = rng.random(chain.energies.size) < chain.intensities
    return [float(e) for e in chain.energies[fired]]


def emitted_spectrum(activities: dict[str, float], bins, chains=None) -> np.ndarray:
    """Line emission rate per kg of source material, binned (photons s^-1 kg^-1 per bin).

    Args:
        activities: specific activity (Bq/kg) per half-chain id.
        bins: bin edges in keV.
    """
    chains = chains or load_chains()
    edges = np.asarray(bins, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("bins must be strictly ascending edges")
    out = np.zeros(edges.size - 1)
    for cid, a in activities.items():
        if a == 0:
            continue
        ch = chains[cid]
        out += np.histogram(ch.energies, bins=edges, weights=a * ch.intensities)[0]
    return out


@dataclass
class EnvironmentSpec:
    """Laboratory conditions: elevation, shielding, and foundation activities."""

    elevation_m: float = 0.0
    ceiling_cm: float = 20.0
    aluminum_cm: float = 1.0
    activities: dict[str, float] = field(default_factory=lambda: dict(NOMINAL_ACTIVITY))

    def __post_init__(self):
        if self.elevation_m < 0:
            raise ValueError("elevation must be >= 0")
        if self.ceiling_cm < 0 or self.aluminum_cm < 0:
            raise ValueError("shielding thicknesses must be >= 0")
        unknown = set(self.activities) - set(CHAIN_IDS)
        if unknown:
            raise ValueError(f"unknown decay chains {sorted(unknown)}; known: {CHAIN_IDS}")
        if any(a < 0 for a in self.activities.values()):
            raise ValueError("activities must be >= 0")
        self.activities = {c: float(self.activities.get(c, 0.0)) for c in CHAIN_IDS}

    def relative_activity(self, chain: str) -> float:
        return self.activities[chain] / NOMINAL_ACTIVITY[chain]


# ---------------------------------------------------------------------------
# Cosmic rays
# ---------------------------------------------------------------------------

SPECTRUM_KINDS = ("power_law_cutoff", "offset_power_law", "broken_power_law")


@dataclass
class CosmicSpeciesModel:
    """Sea-level spectrum and elevation scaling of one cosmic-ray species.

    ``integral_flux`` is the sea-level rate through a horizontal surface
    (cm^-2 s^-1) within [e_min_mev, e_max_mev]. The zenith law is an
    intensity proportional to cos^n(theta); the flux through a horizontal
    plane then carries one more power of cos(theta).

    Spectrum shapes, with E in MeV:
      power_law_cutoff   E^-index * exp(-E / cutoff)
      offset_power_law   (E + offset)^-index
      broken_power_law   continuous piecewise E^-indices[i] between breaks
    """

    species: Species
    integral_flux: float
    scale_height_m: float
    spectrum: str = "power_law_cutoff"
    index: float = 2.0
    cutoff_mev: float = math.inf
    offset_mev: float = 0.0
    breaks_mev: tuple[float, ...] = ()
    indices: tuple[float, ...] = ()
    e_min_mev: float = 1.0
    e_max_mev: float = 1.0e4
    zenith_exponent: float = 2.0

    def __post_init__(self):
        self.species = Species(self.species)
        if self.integral_flux < 0:
            raise ValueError("integral flux must be nonnegative")
        if self.scale_height_m <= 0:
            raise ValueError("scale height must be positive")
        if not 0 < self.e_min_mev < self.e_max_mev:
            raise ValueError("need 0 < e_min < e_max")
        if self.spectrum not in SPECTRUM_KINDS:
            raise ValueError(f"unknown spectrum {self.spectrum!r}; use one of {SPECTRUM_KINDS}")
        if self.spectrum == "broken_power_law" and len(self.indices) != len(self.breaks_mev) + 1:
            raise ValueError("broken_power_law needs one more index than breaks")
        if self.zenith_exponent < 0:
            raise ValueError("zenith exponent must be >= 0")

    def shape(self, energy_mev):
        e = np.asarray(energy_mev, dtype=float)
        if self.spectrum == "power_law_cutoff":
            return e ** (-self.index) * np.exp(-e / self.cutoff_mev)
        if self.spectrum == "offset_power_law":
            return (e + self.offset_mev) ** (-self.index)
        out = e ** (-self.indices[0])
        norm = 1.0
        for brk, lo_idx, hi_idx in zip(self.breaks_mev, self.indices[:-1], self.indices[1:]):
            norm *= brk ** (hi_idx - lo_idx)
            out = np.where(e >= brk, norm * e ** (-hi_idx), out)
        return out

    @functools.cached_property
    def _cdf(self):
        grid = np.geomspace(self.e_min_mev, self.e_max_mev, 4001)
        f = self.shape(grid)
        # trapezoid in log E keeps accuracy across decades
        g = f * grid
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(np.log(grid)))))
        return grid, cum / cum[-1]

    def flux(self, elevation_m: float) -> float:
        """Integral flux at elevation, scaled by exp(H / lambda)."""
        return self.integral_flux * math.exp(elevation_m / self.scale_height_m)

    def sample_energy_mev(self, rng: np.random.Generator, n: int) -> np.ndarray:
        grid, cdf = self._cdf
        return np.exp(np.interp(rng.random(n), cdf, np.log(grid)))

    def sample_cos_zenith(self, rng: np.random.Generator, n: int) -> np.ndarray:
        # p(c) ~ c^(n+1) on (0, 1]
        return (1.0 - rng.random(n)) ** (1.0 / (self.zenith_exponent + 2.0))


def species_weights(models, elevation_m: float) -> np.ndarray:
    """Elevation-scaled integral fluxes, one per model (cm^-2 s^-1)."""
    return np.array([m.flux(elevation_m) for m in models])


def sample_cosmic_primaries(
    models,
    env: EnvironmentSpec,
    n: int,
    rng: np.random.Generator,
    *,
    plane_z_cm: float = 0.0,
    generation_area_cm2: float = 1.0e8,
) -> PhaseSpace:
    """Draw n downgoing primaries on a horizontal square generation plane.

    Species are chosen in proportion to their elevation-scaled integral fluxes.
    The returned set's effective time is n / (total flux x generation area).
    """
    models = list(models)
    if not models:
        raise ValueError("at least one cosmic species must be enabled")
    w = species_weights(models, env.elevation_m)
    total = w.sum()
    if total <= 0:
        raise ValueError("total cosmic flux is zero")
    counts = rng.multinomial(n, w / total)
    species = np.repeat([int(m.species) for m in models], counts)
    energy = np.concatenate([m.sample_energy_mev(rng, c) for m, c in zip(models, counts)]) * 1000.0
    cos_t = np.concatenate([m.sample_cos_zenith(rng, c) for m, c in zip(models, counts)])
    phi = rng.random(n) * 2 * np.pi
    sin_t = np.sqrt(np.clip(1.0 - cos_t**2, 0.0, None))
    direction = np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi), -cos_t])
    side = math.sqrt(generation_area_cm2)
    xy = (rng.random((n, 2)) - 0.5) * side
    position = np.column_stack([xy, np.full(n, plane_z_cm)])
    ps = PhaseSpace(
        species, energy, position, direction, np.ones(n), np.arange(n),
        effective_time_s=n / (total * generation_area_cm2),
        generation_area_cm2=generation_area_cm2,
    )
    ps.meta["n_histories"] = n
    return ps


def sample_cosmic_primary(models, env: EnvironmentSpec, rng: np.random.Generator) -> PhaseSpaceRecord:
    """One downgoing cosmic primary; see sample_cosmic_primaries."""
    return sample_cosmic_primaries(models, env, 1, rng, generation_area_cm2=1.0).records()[0]


def default_cosmic_models() -> list[CosmicSpeciesModel]:
    """Species models from the shipped default configuration."""
    from .config import load_config

    return load_config(None).cosmic_models
