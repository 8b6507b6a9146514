"""Stage 1: particle transport through laterally infinite slab shielding.

Geometry runs along z with z = 0 at the bottom of the lowest layer. Photons
are tracked analogue (exponential free paths, photoelectric / Klein-Nishina
Compton / pair). Charged particles follow straight lines in the continuous
slowing-down approximation. Neutrons only see an exponential removal cross
section. All histories in a batch advance together as numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import physics
from .materials import MaterialDef, load_material
from .phasespace import PhaseSpace, PhaseSpaceRecord
from .physics import ELECTRON_MASS_KEV, Species

PHOTON_CUTOFF_KEV = 10.0
CHARGED_CUTOFF_KEV = 20.0


@dataclass(frozen=True)
class Layer:
    material: MaterialDef
    thickness_cm: float

    def __post_init__(self):
        if not self.thickness_cm > 0:
            raise ValueError(f"layer thickness must be positive, got {self.thickness_cm}")


@dataclass(frozen=True)
class SlabGeometry:
    """Stack of laterally infinite layers, listed bottom to top.

    ``emission_layer`` marks the layer in which decays are generated, if any.
    """

    layers: tuple[Layer, ...]
    emission_layer: int | None = None
    neutron_removal: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.emission_layer is not None and not 0 <= self.emission_layer < len(self.layers):
            raise ValueError("emission layer index out of range")

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum([layer.thickness_cm for layer in self.layers])))

    @property
    def top(self) -> float:
        return float(self.boundaries[-1])

    def removal_coefficient(self, index: int) -> float:
        mat = self.layers[index].material
        return self.neutron_removal.get(mat.name, neutron_removal_coefficient(mat))

    @classmethod
    def gamma_floor(cls, concrete_cm=50.0, aluminum_cm=1.0, concrete="concrete", shell="Al"):
        """Emitting concrete foundation with the cryostat shell above it."""
        layers = [Layer(load_material(concrete), concrete_cm)]
        if aluminum_cm > 0:
            layers.append(Layer(load_material(shell), aluminum_cm))
        return cls(tuple(layers), emission_layer=0)

    @classmethod
    def cosmic_ceiling(cls, concrete_cm=20.0, aluminum_cm=1.0, concrete="concrete", shell="Al"):
        """Concrete roof above the cryostat shell; primaries enter from the top."""
        layers = []
        if aluminum_cm > 0:
            layers.append(Layer(load_material(shell), aluminum_cm))
        if concrete_cm > 0:
            layers.append(Layer(load_material(concrete), concrete_cm))
        return cls(tuple(layers))


def neutron_removal_coefficient(material: MaterialDef) -> float:
    """Fast-neutron removal coefficient (1/cm) from the empirical per-element fits."""
    from .materials import ATOMIC

    total = 0.0
    for el, w in material.composition.items():
        z = ATOMIC[el][0]
        if z == 1:
            per_mass = 0.598
        elif z <= 8:
            per_mass = 0.125 * z**-0.565
        else:
            per_mass = 0.19 * z**-0.743
        total += w * per_mass
    return total * material.density


@dataclass
class TransportResult:
    """Particles leaving the stack and energy left in each layer per history."""

    exiting: PhaseSpace
    deposits: np.ndarray  # (n_histories, n_layers), keV
    history_ids: np.ndarray

    def emergent(self, geom: SlabGeometry, side: str) -> PhaseSpace:
        """Records leaving through the top (upgoing) or bottom (downgoing) face."""
        ex = self.exiting
        if side == "top":
            mask = (ex.direction[:, 2] > 0) & (ex.position[:, 2] >= geom.top - 1e-9)
        elif side == "bottom":
            mask = (ex.direction[:, 2] < 0) & (ex.position[:, 2] <= 1e-9)
        else:
            raise ValueError("side must be 'top' or 'bottom'")
        return ex.select(mask)


# ---------------------------------------------------------------------------
# geometry helpers
# ---------------------------------------------------------------------------

def rotate(directions: np.ndarray, cos_t: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Deflect unit vectors by polar angle arccos(cos_t) and azimuth phi."""
    u, v, w = directions.T
    sin_t = np.sqrt(np.clip(1.0 - cos_t**2, 0.0, None))
    cp, sp = np.cos(phi), np.sin(phi)
    perp = np.sqrt(np.clip(1.0 - w**2, 0.0, None))
    polar = perp < 1e-10
    safe = np.where(polar, 1.0, perp)
    out = np.empty_like(directions)
    out[:, 0] = np.where(polar, sin_t * cp, sin_t * (u * w * cp - v * sp) / safe + u * cos_t)
    out[:, 1] = np.where(polar, sin_t * sp, sin_t * (v * w * cp + u * sp) / safe + v * cos_t)
    out[:, 2] = np.where(polar, np.sign(w) * cos_t, -sin_t * cp * perp + w * cos_t)
    return out / np.linalg.norm(out, axis=1)[:, None]


def isotropic(rng: np.random.Generator, n: int) -> np.ndarray:
    cos_t = 2.0 * rng.random(n) - 1.0
    phi = 2.0 * np.pi * rng.random(n)
    sin_t = np.sqrt(1.0 - cos_t**2)
    return np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t])


def _locate(z, uz, bounds):
    """Index of the layer a particle is in, or moving into when on a boundary."""
    up = np.searchsorted(bounds, z, side="right") - 1
    down = np.searchsorted(bounds, z, side="left") - 1
    return np.where(uz >= 0, up, down)


def _distance_to_boundary(z, uz, layer, bounds):
    n = bounds.size - 1
    lo = bounds[np.clip(layer, 0, n - 1)]
    hi = bounds[np.clip(layer + 1, 1, n)]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(uz > 0, (hi - z) / uz, np.where(uz < 0, (lo - z) / uz, np.inf))
    return np.maximum(d, 0.0), lo, hi


class _Bank:
    """Growable columnar store for particles leaving the stack."""

    def __init__(self):
        self.parts = []

    def add(self, species, energy, pos, dirs, weight, hist):
        if np.size(energy):
            self.parts.append((np.broadcast_to(species, np.shape(energy)).astype(np.int8), energy, pos, dirs, weight, hist))

    def phase_space(self) -> PhaseSpace:
        if not self.parts:
            return PhaseSpace.empty()
        cols = list(zip(*self.parts))
        return PhaseSpace(*(np.concatenate(c) for c in cols))


class _Particles:
    """Columnar particle state; ``keep`` compacts all columns at once."""

    fields = ("species", "energy", "pos", "dirs", "weight", "hist", "layer")

    def __init__(self, species, energy, pos, dirs, weight, hist, layer):
        self.species = np.asarray(species, dtype=np.int8)
        self.energy = np.asarray(energy, dtype=float)
        self.pos = np.asarray(pos, dtype=float).reshape(-1, 3)
        self.dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
        self.weight = np.asarray(weight, dtype=float)
        self.hist = np.asarray(hist, dtype=np.int64)
        self.layer = np.asarray(layer, dtype=np.int64)

    def __len__(self):
        return self.energy.size

    def take(self, mask) -> "_Particles":
        return _Particles(*(getattr(self, f)[mask] for f in self.fields))

    def extend(self, other: "_Particles") -> "_Particles":
        return _Particles(*(np.concatenate([getattr(self, f), getattr(other, f)]) for f in self.fields))


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------

class _Engine:
    def __init__(self, geom: SlabGeometry, rng, photon_cutoff_kev, charged_cutoff_kev, n_hist):
        self.geom = geom
        self.bounds = geom.boundaries
        self.n_layers = len(geom.layers)
        self.rng = rng
        self.photon_cut = photon_cutoff_kev
        self.charged_cut = charged_cutoff_kev
        self.deposits = np.zeros((n_hist, max(self.n_layers, 1)))
        self.exits = _Bank()

    def _deposit(self, hist, layer, amount):
        np.add.at(self.deposits, (hist, layer), amount)

    def _exit(self, p: _Particles):
        self.exits.add(p.species, p.energy, p.pos, p.dirs, p.weight, p.hist)

    def _split_outside(self, p: _Particles) -> _Particles:
        outside = (p.layer < 0) | (p.layer >= self.n_layers)
        if outside.any():
            self._exit(p.take(outside))
            p = p.take(~outside)
        return p

    def run(self, p: _Particles):
        p.layer = _locate(p.pos[:, 2], p.dirs[:, 2], self.bounds)
        p = self._split_outside(p)
        gam = p.species == Species.GAMMA
        neu = p.species == Species.NEUTRON
        charged = self.photons(p.take(gam))
        charged = charged.extend(p.take(~gam & ~neu))
        self.charged(charged)
        self.neutrons(p.take(neu))

    # -- photons ------------------------------------------------------------
    def photons(self, p: _Particles) -> _Particles:
        rng = self.rng
        secondaries = []
        while len(p):
            k = len(p)
            mu = np.empty((k, 3))
            for i, layer in enumerate(self.geom.layers):
                sel = p.layer == i
                if sel.any():
                    mat = layer.material
                    mu[sel] = mat.attenuation_table.interpolate(p.energy[sel]) * mat.density
            mu_tot = mu.sum(axis=1)
            s = rng.exponential(size=k) / mu_tot
            z, uz = p.pos[:, 2], p.dirs[:, 2]
            db, lo, hi = _distance_to_boundary(z, uz, p.layer, self.bounds)
            cross = s >= db
            step = np.where(cross, db, s)
            p.pos = p.pos + p.dirs * step[:, None]
            # pin crossing particles exactly onto the plane they reached
            p.pos[:, 2] = np.where(cross, np.where(uz > 0, hi, lo), p.pos[:, 2])
            p.layer = np.where(cross, p.layer + np.where(uz > 0, 1, -1), p.layer)

            r = rng.random(k) * mu_tot
            photo = ~cross & (r < mu[:, 0])
            compton = ~cross & ~photo & (r < mu[:, 0] + mu[:, 1])
            pair = ~cross & ~photo & ~compton
            alive = ~photo & ~pair

            if photo.any():
                q = p.take(photo)
                secondaries.append(_Particles(
                    np.full(len(q), Species.ELECTRON), q.energy, q.pos, q.dirs, q.weight, q.hist, q.layer))
            if pair.any():
                q = p.take(pair)
                t = np.maximum(q.energy - 2 * ELECTRON_MASS_KEV, 0.0) / 2
                self._deposit(q.hist, q.layer, q.energy - 2 * t)
                for sp in (Species.ELECTRON, Species.POSITRON):
                    secondaries.append(_Particles(np.full(len(q), sp), t, q.pos, q.dirs, q.weight, q.hist, q.layer))
            if compton.any():
                idx = np.flatnonzero(compton)
                e0 = p.energy[idx]
                eps, cos_t = physics.sample_klein_nishina(e0, rng)
                phi = 2 * np.pi * rng.random(idx.size)
                old = p.dirs[idx]
                new = rotate(old, cos_t, phi)
                e1 = eps * e0
                pe = e0[:, None] * old - e1[:, None] * new
                norm = np.linalg.norm(pe, axis=1)
                edir = np.where(norm[:, None] > 0, pe / np.where(norm > 0, norm, 1.0)[:, None], old)
                secondaries.append(_Particles(
                    np.full(idx.size, Species.ELECTRON), e0 - e1, p.pos[idx], edir,
                    p.weight[idx], p.hist[idx], p.layer[idx]))
                p.energy[idx] = e1
                p.dirs[idx] = new
                low = e1 < self.photon_cut
                if low.any():
                    self._deposit(p.hist[idx[low]], p.layer[idx[low]], e1[low])
                    alive[idx[low]] = False

            p = self._split_outside(p.take(alive))

        if not secondaries:
            return _Particles(*(np.zeros((0, 3)) if f in ("pos", "dirs") else np.zeros(0) for f in _Particles.fields))
        out = secondaries[0]
        for s in secondaries[1:]:
            out = out.extend(s)
        return out

    # -- charged particles --------------------------------------------------
    def charged(self, p: _Particles):
        low = p.energy < self.charged_cut
        if low.any():
            q = p.take(low)
            self._deposit(q.hist, q.layer, q.energy)
            p = p.take(~low)
        p = self._split_outside(p)
        while len(p):
            z, uz = p.pos[:, 2], p.dirs[:, 2]
            db, lo, hi = _distance_to_boundary(z, uz, p.layer, self.bounds)
            after = np.zeros(len(p))
            for i, layer in enumerate(self.geom.layers):
                for sp in np.unique(p.species):
                    sel = (p.layer == i) & (p.species == sp)
                    if sel.any():
                        after[sel] = layer.material.energy_after(Species(int(sp)), p.energy[sel] / 1000.0, db[sel]) * 1000.0
            stops = after < self.charged_cut
            self._deposit(p.hist, p.layer, np.where(stops, p.energy, p.energy - after))
            p.energy = after
            p.pos = p.pos + p.dirs * np.where(np.isfinite(db), db, 0.0)[:, None]
            p.pos[:, 2] = np.where(uz > 0, hi, lo)
            p.layer = p.layer + np.where(uz > 0, 1, -1)
            p = self._split_outside(p.take(~stops))

    # -- neutrons -----------------------------------------------------------
    def neutrons(self, p: _Particles):
        removal = np.array([self.geom.removal_coefficient(i) for i in range(self.n_layers)])
        while len(p):
            z, uz = p.pos[:, 2], p.dirs[:, 2]
            db, lo, hi = _distance_to_boundary(z, uz, p.layer, self.bounds)
            s = self.rng.exponential(size=len(p)) / removal[p.layer]
            removed = s < db
            self._deposit(p.hist[removed], p.layer[removed], p.energy[removed])
            p = p.take(~removed)
            db, lo, hi, uz = db[~removed], lo[~removed], hi[~removed], uz[~removed]
            p.pos = p.pos + p.dirs * db[:, None]
            p.pos[:, 2] = np.where(uz > 0, hi, lo)
            p.layer = p.layer + np.where(uz > 0, 1, -1)
            p = self._split_outside(p)


def transport(
    ps: PhaseSpace,
    geom: SlabGeometry,
    rng: np.random.Generator,
    photon_cutoff_kev: float = PHOTON_CUTOFF_KEV,
    charged_cutoff_kev: float = CHARGED_CUTOFF_KEV,
) -> TransportResult:
    """Transport every record of a phase-space set through the stack.

    Records sharing a history id share a row of the returned deposit array.
    """
    ids, inverse = np.unique(ps.history, return_inverse=True)
    eng = _Engine(geom, rng, photon_cutoff_kev, charged_cutoff_kev, ids.size)
    eng.run(_Particles(ps.species, ps.energy.copy(), ps.position.copy(), ps.direction.copy(),
                       ps.weight.copy(), inverse, np.zeros(len(ps), dtype=np.int64)))
    exiting = eng.exits.phase_space()
    exiting.history = ids[exiting.history] if len(exiting) else exiting.history
    exiting.effective_time_s = ps.effective_time_s
    exiting.generation_area_cm2 = ps.generation_area_cm2
    return TransportResult(exiting, eng.deposits[:, : len(geom.layers)], ids)


def _single(record: PhaseSpaceRecord, geom, rng, photon_cutoff_kev, charged_cutoff_kev):
    res = transport(PhaseSpace.from_records([record]), geom, rng, photon_cutoff_kev, charged_cutoff_kev)
    return res.exiting.records(), res.deposits[0] if len(geom.layers) else np.zeros(0)


def transport_photon(record: PhaseSpaceRecord, geom: SlabGeometry, rng, cutoff: float = PHOTON_CUTOFF_KEV,
                     charged_cutoff: float = CHARGED_CUTOFF_KEV):
    """Follow one photon and its secondaries; returns (exiting records, keV per layer)."""
    if Species(record.species) != Species.GAMMA:
        raise ValueError(f"transport_photon needs a photon, got {Species(record.species).label}")
    return _single(record, geom, rng, cutoff, charged_cutoff)


def transport_charged(record: PhaseSpaceRecord, geom: SlabGeometry, rng, cutoff: float = CHARGED_CUTOFF_KEV):
    """Slow one charged particle down along a straight line; returns (exiting records, keV per layer)."""
    if Species(record.species) not in physics.CHARGED_SPECIES:
        raise ValueError(f"transport_charged needs e+-, mu+- or proton, got {Species(record.species).label}")
    return _single(record, geom, rng, PHOTON_CUTOFF_KEV, cutoff)


# ---------------------------------------------------------------------------
# stage-1 drivers
# ---------------------------------------------------------------------------

def emit_decays(chains, activities, geom: SlabGeometry, n_decays: int, rng, generation_area_cm2: float):
    """Decay photons spread uniformly through the emission layer, isotropic.

    Returns (photon phase space with history = decay index, effective time s).
    """
    if geom.emission_layer is None:
        raise ValueError("geometry has no emission layer")
    ids = [c for c in chains if activities.get(c, 0.0) > 0]
    a = np.array([activities[c] for c in ids])
    if not ids or a.sum() <= 0:
        raise ValueError("total activity is zero")
    if n_decays <= 0:
        raise ValueError("n_decays must be positive")
    layer = geom.layers[geom.emission_layer]
    mass_kg = layer.material.density * layer.thickness_cm * generation_area_cm2 / 1000.0
    effective_time = n_decays / (a.sum() * mass_kg)

    counts = rng.multinomial(n_decays, a / a.sum())
    starts = np.concatenate(([0], np.cumsum(counts)))
    hist, energy = [], []
    for cid, start, count in zip(ids, starts[:-1], counts):
        ch = chains[cid]
        for e, prob in zip(ch.energies, ch.intensities):
            fired = np.flatnonzero(rng.random(count) < prob)
            hist.append(start + fired)
            energy.append(np.full(fired.size, e))
    hist = np.concatenate(hist)
    energy = np.concatenate(energy)
    order = np.argsort(hist, kind="stable")
    hist, energy = hist[order], energy[order]

    side = math.sqrt(generation_area_cm2)
    decay_xy = (rng.random((n_decays, 2)) - 0.5) * side
    z0 = geom.boundaries[geom.emission_layer]
    decay_z = z0 + rng.random(n_decays) * layer.thickness_cm
    pos = np.column_stack([decay_xy[hist], decay_z[hist]])
    dirs = isotropic(rng, hist.size)
    ps = PhaseSpace(np.zeros(hist.size), energy, pos, dirs, np.ones(hist.size), hist,
                    effective_time, generation_area_cm2)
    ps.meta["n_histories"] = n_decays
    return ps, effective_time


def simulate_slab_emission(
    activities: dict[str, float],
    geom: SlabGeometry,
    n_decays: int,
    rng: np.random.Generator,
    *,
    chains=None,
    generation_area_cm2: float = 1.0e8,
    photon_cutoff_kev: float = PHOTON_CUTOFF_KEV,
    charged_cutoff_kev: float = CHARGED_CUTOFF_KEV,
) -> PhaseSpace:
    """Decays in the emitting slab, transported; returns what leaves the top face.

    The effective source time is n_decays / (total activity x slab mass in the
    generation area).
    """
    from .sources import load_chains

    chains = chains or load_chains()
    primaries, t_eff = emit_decays(chains, activities, geom, n_decays, rng, generation_area_cm2)
    res = transport(primaries, geom, rng, photon_cutoff_kev, charged_cutoff_kev)
    out = res.emergent(geom, "top")
    out.effective_time_s = t_eff
    out.generation_area_cm2 = generation_area_cm2
    out.meta["n_histories"] = n_decays
    return out


def simulate_cosmic_shielding(
    models,
    env,
    geom: SlabGeometry,
    n: int,
    rng: np.random.Generator,
    *,
    generation_area_cm2: float = 1.0e8,
    photon_cutoff_kev: float = PHOTON_CUTOFF_KEV,
    charged_cutoff_kev: float = CHARGED_CUTOFF_KEV,
) -> PhaseSpace:
    """Cosmic primaries through ceiling and shell; returns what leaves the bottom face."""
    from .sources import sample_cosmic_primaries

    if n <= 0:
        raise ValueError("n must be positive")
    primaries = sample_cosmic_primaries(models, env, n, rng, plane_z_cm=geom.top,
                                        generation_area_cm2=generation_area_cm2)
    res = transport(primaries, geom, rng, photon_cutoff_kev, charged_cutoff_kev)
    out = res.emergent(geom, "bottom")
    out.effective_time_s = primaries.effective_time_s
    out.generation_area_cm2 = generation_area_cm2
    out.meta["n_histories"] = n
    return out
