"""Substrate and shielding materials with photon and charged-particle interaction tables.

Tables live as CSV files under ``radbkg/data``; they are produced by
``tools/make_tables.py`` and read lazily. All interpolation is linear in
log(energy)-log(value), which reproduces node values exactly and cannot
overshoot between nodes.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from importlib import resources

from pathlib import Path

import numpy as np

from . import physics
from .physics import Species

SILICON_DENSITY = 2.329  # g/cm^3, reference for relative density

PROCESSES = ("photoelectric", "compton", "pair")
PHOTON_RANGE_KEV = (1.0, 1.0e4)
CHARGED_RANGE_MEV = (1.0e-2, 1.0e4)

ATOMIC = {
    # symbol: (Z, atomic mass g/mol, mean excitation energy eV)
    "H": (1, 1.008, 19.2),
    "C": (6, 12.011, 81.0),
    "N": (7, 14.007, 82.0),
    "O": (8, 15.999, 95.0),
    "Na": (11, 22.990, 149.0),
    "Mg": (12, 24.305, 156.0),
    "Al": (13, 26.982, 166.0),
    "Si": (14, 28.085, 173.0),
    "K": (19, 39.098, 190.0),
    "Ca": (20, 40.078, 191.0),
    "Fe": (26, 55.845, 286.0),
    "Ga": (31, 69.723, 334.0),
    "As": (33, 74.922, 347.0),
}

# name: (density g/cm^3, composition, mean excitation energy override eV or None).
# Composition is either atom counts of a formula unit or mass fractions (floats < 1).
_DEFINITIONS = {
    "Si": (2.329, {"Si": 1}, None),
    "SiC": (3.21, {"Si": 1, "C": 1}, None),
    "SiO2": (2.65, {"Si": 1, "O": 2}, 139.2),
    "Al2O3": (3.98, {"Al": 2, "O": 3}, 145.2),
    "GaN": (6.15, {"Ga": 1, "N": 1}, None),
    "GaAs": (5.3176, {"Ga": 1, "As": 1}, 384.9),
    "Al": (2.699, {"Al": 1}, None),
    # ordinary concrete: NIST reference composition (mass fractions), NBS-03 density
    "concrete": (
        2.35,
        {
            "H": 0.010000,
            "C": 0.001000,
            "O": 0.529107,
            "Na": 0.016000,
            "Mg": 0.002000,
            "Al": 0.033872,
            "Si": 0.337021,
            "K": 0.013000,
            "Ca": 0.044000,
            "Fe": 0.014000,
        },
        135.2,
    ),
}

SUBSTRATE_MATERIALS = ("Si", "SiC", "SiO2", "Al2O3", "GaN", "GaAs")
SHIELDING_MATERIALS = ("concrete", "Al")

# stopping table file stem per species; mu+ and mu- share one table
_STOPPING_STEM = {
    Species.ELECTRON: "electron",
    Species.POSITRON: "positron",
    Species.MU_MINUS: "muon",
    Species.MU_PLUS: "muon",
    Species.PROTON: "proton",
}


class OutOfDomainError(ValueError):
    """Requested energy lies outside a table's range."""


def known_materials() -> tuple[str, ...]:
    return tuple(_DEFINITIONS)


def mass_fractions(composition: dict) -> dict[str, float]:
    values = list(composition.values())
    if all(isinstance(v, int) for v in values):
        masses = {el: n * ATOMIC[el][1] for el, n in composition.items()}
        total = sum(masses.values())
        return {el: m / total for el, m in masses.items()}
    total = sum(values)
    return {el: w / total for el, w in composition.items()}


@dataclass(frozen=True)
class Table:
    """One energy-indexed table with one or more value columns."""

    energy: np.ndarray
    values: np.ndarray  # shape (n_energy, n_columns)
    columns: tuple[str, ...]

    def __post_init__(self):
        if np.any(np.diff(self.energy) <= 0):
            raise ValueError("table energies must be strictly increasing")
        if np.any(self.values <= 0):
            raise ValueError("table values must be positive")

    def interpolate(self, energy, column: int | slice = slice(None)):
        e = np.asarray(energy, dtype=float)
        lo, hi = self.energy[0], self.energy[-1]
        if np.any((e < lo * (1 - 1e-12)) | (e > hi * (1 + 1e-12))):
            raise OutOfDomainError(f"energy outside table range [{lo:g}, {hi:g}]")
        return _loglog(self.energy, self.values[:, column], np.clip(e, lo, hi))


def _loglog(x, y, xq):
    lx = np.log(x)
    ly = np.log(y)
    lq = np.log(xq)
    i = np.clip(np.searchsorted(lx, lq, side="right") - 1, 0, lx.size - 2)
    f = (lq - lx[i]) / (lx[i + 1] - lx[i])
    if ly.ndim == 1:
        return np.exp(ly[i] + f * (ly[i + 1] - ly[i]))
    return np.exp(ly[i] + f[..., None] * (ly[i + 1] - ly[i]))


@dataclass(frozen=True, eq=False)
class MaterialDef:
    """A homogeneous material with its interaction tables.

    Attributes:
        name: identifier used in configs and table file names.
        density: mass density in g/cm^3.
        composition: element mass fractions.
        mean_excitation_ev: mean excitation energy I.
        attenuation_table: mass attenuation coefficients (cm^2/g) per process vs keV.
        stopping_tables: mass stopping power (MeV cm^2/g) vs MeV, keyed by table stem.
    """

    name: str
    density: float
    composition: dict[str, float]
    mean_excitation_ev: float
    attenuation_table: Table
    stopping_tables: dict[str, Table] = field(repr=False)

    def __post_init__(self):
        if self.density <= 0:
            raise ValueError(f"density must be positive, got {self.density}")
        if abs(sum(self.composition.values()) - 1.0) > 1e-6:
            raise ValueError(f"mass fractions of {self.name} do not sum to 1")

    @property
    def relative_density(self) -> float:
        return self.density / SILICON_DENSITY

    @property
    def contains_gallium(self) -> bool:
        return "Ga" in self.composition

    @functools.cached_property
    def z_over_a(self) -> float:
        return sum(w * ATOMIC[el][0] / ATOMIC[el][1] for el, w in self.composition.items())

    @functools.cached_property
    def z_effective(self) -> float:
        """Electron-weighted mean Z, used for the bremsstrahlung estimate."""
        num = sum(w * ATOMIC[el][0] ** 2 / ATOMIC[el][1] for el, w in self.composition.items())
        return num / self.z_over_a

    @functools.cached_property
    def density_effect_parameters(self):
        return physics.sternheimer_parameters(self.mean_excitation_ev, self.density, self.z_over_a)

    @functools.cached_property
    def _range_tables(self) -> dict[str, tuple[np.ndarray, np.ndarray]]:
        return {stem: _csda_range(tab) for stem, tab in self.stopping_tables.items()}

    def range_table(self, species: Species) -> tuple[np.ndarray, np.ndarray]:
        """(kinetic energy MeV, CSDA range cm) nodes for a charged species."""
        e, r = self._range_tables[_stem(species)]
        return e, r / self.density

    def csda_range(self, species: Species, kinetic_mev):
        """CSDA range in cm; below the first table node the range is taken linear in T."""
        e, r = self.range_table(species)
        t = np.asarray(kinetic_mev, dtype=float)
        inside = np.exp(np.interp(np.log(np.clip(t, e[0], e[-1])), np.log(e), np.log(r)))
        below = r[0] * np.clip(t, 0, None) / e[0]
        return np.where(t < e[0], below, inside)

    def energy_after(self, species: Species, kinetic_mev, path_cm):
        """Kinetic energy left after a straight path, by range-energy inversion.

        Returns 0 where the path exceeds the CSDA range.
        """
        e, r = self.range_table(species)
        residual = self.csda_range(species, kinetic_mev) - np.asarray(path_cm, dtype=float)
        res = np.maximum(residual, 0.0)
        val = np.where(
            res < r[0],
            e[0] * res / r[0],
            np.exp(np.interp(np.log(np.maximum(res, r[0])), np.log(r), np.log(e))),
        )
        return np.where(residual > 0, val, 0.0)


def _stem(species: Species) -> str:
    try:
        return _STOPPING_STEM[Species(species)]
    except (KeyError, ValueError):
        raise ValueError(f"no stopping-power table for species {species!r}") from None


def _csda_range(tab: Table) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative integral of 1/S (g/cm^2) on the table nodes.

    The segment below the first node assumes S proportional to sqrt(T), which
    integrates to 2 T0 / S0.
    """
    e = tab.energy
    inv = 1.0 / tab.values[:, 0]
    # trapezoid in log-energy: dT/S = T/S dlnT
    g = e * inv
    seg = 0.5 * (g[1:] + g[:-1]) * np.diff(np.log(e))
    r0 = 2.0 * e[0] * inv[0]
    return e, r0 + np.concatenate(([0.0], np.cumsum(seg)))


def attenuation_coefficient(material: MaterialDef, energy_kev, process: str = "total"):
    """Linear attenuation coefficient (1/cm) at photon energy in keV.

    Args:
        material: the medium.
        energy_kev: scalar or array in [1 keV, 10 MeV].
        process: one of ``photoelectric``, ``compton``, ``pair`` or ``total``.

    Raises:
        OutOfDomainError: energy outside the table.
    """
    tab = material.attenuation_table
    if process == "total":
        mu_rho = tab.interpolate(energy_kev)
        return mu_rho.sum(axis=-1) * material.density
    try:
        col = tab.columns.index(process)
    except ValueError:
        raise ValueError(f"unknown photon process {process!r}; use one of {PROCESSES} or 'total'") from None
    return tab.interpolate(energy_kev, col) * material.density


def stopping_power(material: MaterialDef, species, kinetic_energy_mev):
    """Linear stopping power dE/dx (MeV/cm) for a charged species."""
    if isinstance(species, str):
        species = Species.parse(species)
    tab = material.stopping_tables[_stem(species)]
    return tab.interpolate(kinetic_energy_mev, 0) * material.density


# ---------------------------------------------------------------------------
# Table I/O
# ---------------------------------------------------------------------------

def parse_header(line: str) -> dict[str, str]:
    if not line.startswith("#"):
        raise ValueError("table file must start with a '# key=value' header line")
    fields = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if sep:
            fields[key] = value
    return fields


def read_table(path_or_text, *, text: bool = False) -> tuple[dict[str, str], Table]:
    """Parse a table CSV: header line, '#' comments, a column-name row, numeric rows."""
    content = path_or_text if text else Path(path_or_text).read_text()
    lines = content.splitlines()
    header = parse_header(lines[0])
    body = [ln for ln in lines[1:] if ln.strip() and not ln.startswith("#")]
    columns = tuple(c.strip() for c in body[0].split(","))
    data = np.array([[float(x) for x in ln.split(",")] for ln in body[1:]])
    return header, Table(energy=data[:, 0], values=data[:, 1:], columns=columns[1:])


def write_table(path, header: dict[str, str], table: Table, comments=(), column_names=("energy",)):
    lines = ["# " + " ".join(f"{k}={v}" for k, v in header.items())]
    lines += [f"# {c}" for c in comments]
    lines.append(",".join((column_names[0],) + tuple(table.columns)))
    for e, row in zip(table.energy, table.values):
        lines.append(",".join([f"{e:.8g}"] + [f"{v:.8g}" for v in row]))
    Path(path).write_text("\n".join(lines) + "\n")


def _data_dir():
    return resources.files("radbkg") / "data"


@functools.lru_cache(maxsize=None)
def load_material(name: str) -> MaterialDef:
    """Load a material by name from the shipped tables.

    Raises:
        KeyError: unknown material; the message lists the known names.
    """
    if name not in _DEFINITIONS:
        raise KeyError(f"unknown material {name!r}; known materials: {', '.join(_DEFINITIONS)}")
    density, comp, i_override = _DEFINITIONS[name]
    fractions = mass_fractions(comp)
    data = _data_dir()
    _, att = read_table(data / "attenuation" / f"{name}.csv")
    stopping = {}
    for stem in sorted(set(_STOPPING_STEM.values())):
        _, stopping[stem] = read_table(data / "stopping" / f"{name}_{stem}.csv")
    return MaterialDef(
        name=name,
        density=density,
        composition=fractions,
        mean_excitation_ev=i_override or bragg_mean_excitation(fractions),
        attenuation_table=att,
        stopping_tables=stopping,
    )


def bragg_mean_excitation(fractions: dict[str, float]) -> float:
    """Bragg additivity: electron-weighted mean of ln I over the elements."""
    num = sum(w * ATOMIC[el][0] / ATOMIC[el][1] * math.log(ATOMIC[el][2]) for el, w in fractions.items())
    den = sum(w * ATOMIC[el][0] / ATOMIC[el][1] for el, w in fractions.items())
    return math.exp(num / den)


def definition(name: str):
    """(density, mass fractions, mean excitation eV) without loading tables."""
    density, comp, i_override = _DEFINITIONS[name]
    fractions = mass_fractions(comp)
    return density, fractions, i_override or bragg_mean_excitation(fractions)
