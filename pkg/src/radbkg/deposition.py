"""Stage 2: energy deposited in a rectangular substrate by re-aimed particles.

The substrate is an axis-aligned box centred on the origin, thickness along z.
Each stage-1 history that leaves any energy in the box is one event.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import physics
from .materials import MaterialDef, load_material
from .phasespace import PhaseSpace
from .physics import ELECTRON_MASS_KEV, Species
from .transport import CHARGED_CUTOFF_KEV, PHOTON_CUTOFF_KEV, rotate

REFERENCE_THICKNESS_UM = 500.0
REFERENCE_SHAPE_THICKNESS_MM = 0.5
SPECTRUM_TAG = "radbkg-spec v1"


@dataclass(frozen=True)
class SubstrateSpec:
    """A rectangular wafer: material, thickness (um) and lateral size (mm)."""

    material: MaterialDef
    thickness_um: float = 500.0
    width_mm: float = 10.0
    length_mm: float = 10.0

    def __post_init__(self):
        if isinstance(self.material, str):
            object.__setattr__(self, "material", load_material(self.material))
        if not self.thickness_um > 0:
            raise ValueError("thickness must be positive")
        if not (self.width_mm > 0 and self.length_mm > 0):
            raise ValueError("lateral dimensions must be positive")

    @classmethod
    def nominal(cls, material="Si") -> "SubstrateSpec":
        return cls(material)

    @property
    def tau(self) -> float:
        return self.thickness_um / REFERENCE_THICKNESS_UM

    @property
    def area_mm2(self) -> float:
        return self.width_mm * self.length_mm

    @property
    def side_to_top_ratio(self) -> float:
        """Total side-face area over top-face area at the actual thickness."""
        t_mm = self.thickness_um / 1000.0
        return 2 * t_mm * (self.width_mm + self.length_mm) / self.area_mm2

    @property
    def shape_descriptor(self) -> float:
        """Side-to-top ratio evaluated at the reference 500 um thickness.

        Depends only on the lateral shape, so thickness scaling stays with tau.
        """
        return 2 * REFERENCE_SHAPE_THICKNESS_MM * (self.width_mm + self.length_mm) / self.area_mm2

    @property
    def half_extents_cm(self) -> np.ndarray:
        return np.array([self.width_mm / 20.0, self.length_mm / 20.0, self.thickness_um / 2.0e4])


def default_binning() -> np.ndarray:
    """200 logarithmic bins from 1 keV to 100 MeV."""
    return np.logspace(0.0, 5.0, 201)


@dataclass
class DepositSpectrum:
    """Weighted histogram of per-event deposited energy (keV) over a live time."""

    edges: np.ndarray
    counts: np.ndarray
    live_time_s: float
    overflow: float = 0.0
    underflow: float = 0.0
    sumw2: np.ndarray | None = None
    events: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("bin edges must be strictly ascending")
        if self.counts.shape != (self.edges.size - 1,):
            raise ValueError("counts length must be len(edges) - 1")
        if np.any(self.counts < 0) or self.overflow < 0 or self.underflow < 0:
            raise ValueError("counts must be nonnegative")
        if not self.live_time_s > 0:
            raise ValueError("live time must be positive")
        if self.sumw2 is None:
            self.sumw2 = self.counts.copy()

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def total(self) -> float:
        return float(self.counts.sum() + self.overflow + self.underflow)

    @classmethod
    def from_events(cls, energies, weights, live_time_s, edges=None, keep_events=False):
        edges = default_binning() if edges is None else np.asarray(edges, dtype=float)
        e = np.asarray(energies, dtype=float)
        w = np.asarray(weights, dtype=float)
        pos = e > 0
        e, w = e[pos], w[pos]
        counts = np.histogram(e, edges, weights=w)[0]
        sumw2 = np.histogram(e, edges, weights=w * w)[0]
        return cls(
            edges, counts, live_time_s,
            overflow=float(w[e >= edges[-1]].sum()),
            underflow=float(w[e < edges[0]].sum()),
            sumw2=sumw2,
            events=(e, w) if keep_events else None,
        )

    @property
    def density(self) -> np.ndarray:
        """Counts per keV."""
        return self.counts / np.diff(self.edges)

    def mode(self) -> float:
        """Geometric centre of the bin with the highest counts per keV.

        Counts per bin would track E dN/dE on logarithmic binning and shift
        the peak of a long-tailed spectrum upward.
        """
        i = int(np.argmax(self.density))
        return float(math.sqrt(self.edges[i] * self.edges[i + 1]))


def merge_spectra(spectra, *, add_live_time: bool = True) -> DepositSpectrum:
    """Sum spectra with identical binning.

    With ``add_live_time`` the inputs are partitions of one exposure and their
    live times add; otherwise all must share one live time, which is kept.
    """
    spectra = list(spectra)
    if not spectra:
        raise ValueError("nothing to merge")
    edges = spectra[0].edges
    for s in spectra[1:]:
        if s.edges.shape != edges.shape or not np.array_equal(s.edges, edges):
            raise ValueError("cannot merge spectra with different binning")
    if add_live_time:
        live = math.fsum(s.live_time_s for s in spectra)
    else:
        live = spectra[0].live_time_s
        if any(not math.isclose(s.live_time_s, live) for s in spectra):
            raise ValueError("independent-source merge needs equal live times")
    events = None
    if all(s.events is not None for s in spectra):
        events = (np.concatenate([s.events[0] for s in spectra]), np.concatenate([s.events[1] for s in spectra]))
    return DepositSpectrum(
        edges.copy(),
        np.sum([s.counts for s in spectra], axis=0),
        live,
        overflow=math.fsum(s.overflow for s in spectra),
        underflow=math.fsum(s.underflow for s in spectra),
        sumw2=np.sum([s.sumw2 for s in spectra], axis=0),
        events=events,
    )


def write_spectrum(spec: DepositSpectrum, path) -> None:
    edges, counts = spec.edges.tolist(), spec.counts.tolist()
    lines = [f"# {SPECTRUM_TAG} live_time_s={float(spec.live_time_s)!r}"]
    lines.append(f"0,{edges[0]!r},{float(spec.underflow)!r}")
    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
        lines.append(f"{lo!r},{hi!r},{c!r}")
    lines.append(f"{edges[-1]!r},inf,{float(spec.overflow)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_spectrum(path) -> DepositSpectrum:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# " + SPECTRUM_TAG):
        raise ValueError(f"{path}: not a {SPECTRUM_TAG} file")
    header = dict(tok.split("=", 1) for tok in text[0][2:].split() if "=" in tok)
    rows = np.array([[float(x) for x in ln.split(",")] for ln in text[1:] if ln.strip()])
    under, body, over = rows[0], rows[1:-1], rows[-1]
    edges = np.concatenate((body[:, 0], body[-1:, 1]))
    return DepositSpectrum(edges, body[:, 2], float(header["live_time_s"]),
                           overflow=float(over[2]), underflow=float(under[2]))


# ---------------------------------------------------------------------------
# Landau straggling
# ---------------------------------------------------------------------------

LANDAU_MODE = -0.22278298
LANDAU_TAIL = 1.0  # pdf -> LANDAU_TAIL / lam^2 for large lam
# scipy's landau is the unit-scale stable law; lam = (pi/2) x + ln(pi/2)
_LANDAU_SCALE = math.pi / 2.0
_LANDAU_SHIFT = math.log(math.pi / 2.0)


@functools.lru_cache(maxsize=1)
def _landau_tables():
    """Landau cdf and cumulative first moment in lam units on a grid up to 1e6.

    Beyond the grid the tail is handled analytically from the 1/lam^2 law.
    """
    from scipy.stats import landau

    lam = np.concatenate((np.linspace(-3.5, 20.0, 4000), np.geomspace(20.0, 1.0e6, 4000)[1:]))
    x = (lam - _LANDAU_SHIFT) / _LANDAU_SCALE
    pdf = landau.pdf(x) / _LANDAU_SCALE
    cdf = landau.cdf(x)
    m1 = np.concatenate(([0.0], np.cumsum(0.5 * (lam[1:] * pdf[1:] + lam[:-1] * pdf[:-1]) * np.diff(lam))))
    return lam, cdf, m1


def landau_truncation(target):
    """Cut lam_max at which the Landau mean conditional on lam <= lam_max equals target.

    Returns (lam_max, cdf(lam_max)); targets below the smallest attainable
    conditional mean give NaN.
    """
    lam, cdf, m1 = _landau_tables()
    keep = lam > 0.0
    grid, tm = lam[keep], m1[keep] / cdf[keep]
    target = np.asarray(target, dtype=float)
    inside = target <= tm[-1]
    # past the grid the conditional mean grows as LANDAU_TAIL * ln(lam_max)
    expo = np.minimum((target - tm[-1]) / LANDAU_TAIL, 700.0)
    with np.errstate(over="ignore"):
        cut = np.where(inside, np.interp(target, tm, grid), grid[-1] * np.exp(np.maximum(expo, 0.0)))
    f = np.where(cut <= lam[-1], np.interp(cut, lam, cdf), 1.0 - LANDAU_TAIL / cut)
    bad = ~np.isfinite(target) | (target < tm[0])
    return np.where(bad, np.nan, cut), np.where(bad, np.nan, f)


def sample_landau(rng: np.random.Generator, cdf_max) -> np.ndarray:
    """Standard Landau variates restricted to cdf <= cdf_max, by inversion."""
    lam, cdf, _ = _landau_tables()
    u = rng.random(np.shape(cdf_max)) * cdf_max
    tail = u > cdf[-1]
    out = np.interp(u, cdf, lam)
    out[tail] = LANDAU_TAIL / (1.0 - u[tail])
    return out


def most_probable_loss_mev(material: MaterialDef, species: Species, kinetic_mev, path_cm):
    """Most probable energy loss (MeV) over a path, with Landau width xi.

    Returns (delta_p, xi), both in MeV.
    """
    mass = Species(species).mass_mev
    beta2, _, bg = physics.kinematics(kinetic_mev, mass)
    xi = physics.landau_xi_mev(material.z_over_a, material.density * np.asarray(path_cm), beta2)
    i_mev = material.mean_excitation_ev * 1e-6
    delta = physics.density_effect(bg, material.density_effect_parameters)
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = xi * (np.log(2 * physics.ELECTRON_MASS_MEV * bg**2 / i_mev) + np.log(xi / i_mev) + 0.2 - beta2 - delta)
    return dp, xi


def straggled_loss_kev(material, species, kinetic_kev, path_cm, mean_loss_kev, rng):
    """Landau-distributed losses whose mean equals the CSDA mean loss.

    The Landau variable is truncated at the point where its conditional mean
    reproduces the mean loss; when no such point exists (thick absorber or slow
    particle) the mean loss is returned unchanged.
    """
    kinetic_kev = np.asarray(kinetic_kev, dtype=float)
    dp, xi = most_probable_loss_mev(material, species, kinetic_kev / 1000.0, path_cm)
    dp_kev, xi_kev = dp * 1000.0, xi * 1000.0
    with np.errstate(divide="ignore", invalid="ignore"):
        target = LANDAU_MODE + (mean_loss_kev - dp_kev) / xi_kev
    _, f = landau_truncation(np.where(dp_kev > 0, target, np.nan))
    ok = np.isfinite(f)
    out = np.array(mean_loss_kev, dtype=float, copy=True)
    if ok.any():
        out[ok] = dp_kev[ok] + xi_kev[ok] * (sample_landau(rng, f[ok]) - LANDAU_MODE)
    return np.clip(out, 0.0, kinetic_kev)


# ---------------------------------------------------------------------------
# ray-box geometry
# ---------------------------------------------------------------------------

def box_interval(pos, dirs, half):
    """Entry and exit path lengths of rays through an origin-centred box.

    Returns (t_in, t_out, hit); t_in is clipped at 0 for rays starting inside.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-half - pos) / dirs
        t2 = (half - pos) / dirs
    parallel = dirs == 0
    inside = np.abs(pos) <= half
    lo = np.where(parallel, np.where(inside, -np.inf, np.inf), np.minimum(t1, t2))
    hi = np.where(parallel, np.where(inside, np.inf, -np.inf), np.maximum(t1, t2))
    t_in = np.max(lo, axis=1)
    t_out = np.min(hi, axis=1)
    t_in = np.maximum(t_in, 0.0)
    return t_in, t_out, t_out > t_in


def _exit_distance(pos, dirs, half):
    return box_interval(pos, dirs, half)[1]


# ---------------------------------------------------------------------------
# deposition
# ---------------------------------------------------------------------------

def _charged_deposit(material, species, energy, path, straggling, rng):
    """Energy (keV) lost by charged particles crossing a straight chord."""
    out = np.zeros(energy.size)
    for sp in np.unique(species):
        sel = species == sp
        s = Species(int(sp))
        after = material.energy_after(s, energy[sel] / 1000.0, path[sel]) * 1000.0
        loss = energy[sel] - after
        stopped = after <= 0
        if straggling:
            passing = ~stopped
            if passing.any():
                loss_p = straggled_loss_kev(material, s, energy[sel][passing], path[sel][passing], loss[passing], rng)
                loss = loss.copy()
                loss[passing] = loss_p
        out[sel] = loss
    return out


def _photon_deposits(material, energy, pos, dirs, hist, half, rng, photon_cut, charged_cut):
    """Follow photons inside the box; returns (history index, keV) pairs."""
    dep_h, dep_e = [], []
    while energy.size:
        t_in, t_out, _ = box_interval(pos, dirs, half)
        mu = material.attenuation_table.interpolate(energy) * material.density
        mu_tot = mu.sum(axis=1)
        s = rng.exponential(size=energy.size) / mu_tot
        interact = t_in + s < t_out
        if not interact.any():
            break
        energy, pos, dirs, hist, mu, mu_tot = (
            energy[interact], pos[interact], dirs[interact], hist[interact], mu[interact], mu_tot[interact])
        pos = pos + dirs * (t_in[interact] + s[interact])[:, None]
        r = rng.random(energy.size) * mu_tot
        photo = r < mu[:, 0]
        compton = ~photo & (r < mu[:, 0] + mu[:, 1])
        pair = ~photo & ~compton

        el_e, el_dir, el_pos, el_hist, el_sp = [], [], [], [], []
        if photo.any():
            el_e.append(energy[photo]); el_dir.append(dirs[photo]); el_pos.append(pos[photo])
            el_hist.append(hist[photo]); el_sp.append(np.full(photo.sum(), Species.ELECTRON))
        if pair.any():
            t = np.maximum(energy[pair] - 2 * ELECTRON_MASS_KEV, 0.0) / 2
            dep_h.append(hist[pair]); dep_e.append(energy[pair] - 2 * t)
            for sp in (Species.ELECTRON, Species.POSITRON):
                el_e.append(t); el_dir.append(dirs[pair]); el_pos.append(pos[pair])
                el_hist.append(hist[pair]); el_sp.append(np.full(pair.sum(), sp))
        alive = compton.copy()
        if compton.any():
            e0 = energy[compton]
            eps, cos_t = physics.sample_klein_nishina(e0, rng)
            old = dirs[compton]
            new = rotate(old, cos_t, 2 * np.pi * rng.random(e0.size))
            e1 = eps * e0
            pe = e0[:, None] * old - e1[:, None] * new
            norm = np.linalg.norm(pe, axis=1)
            edir = np.where(norm[:, None] > 0, pe / np.where(norm > 0, norm, 1.0)[:, None], old)
            el_e.append(e0 - e1); el_dir.append(edir); el_pos.append(pos[compton])
            el_hist.append(hist[compton]); el_sp.append(np.full(e0.size, Species.ELECTRON))
            energy = energy.copy()
            dirs = dirs.copy()
            energy[compton] = e1
            dirs[compton] = new
            low = np.zeros_like(alive)
            low[compton] = e1 < photon_cut
            if low.any():
                dep_h.append(hist[low]); dep_e.append(energy[low])
                alive &= ~low

        if el_e:
            e = np.concatenate(el_e)
            d = np.concatenate(el_dir)
            p = np.concatenate(el_pos)
            h = np.concatenate(el_hist)
            sp = np.concatenate(el_sp).astype(np.int8)
            local = e < charged_cut
            dep_h.append(h[local]); dep_e.append(e[local])
            far = ~local
            if far.any():
                path = _exit_distance(p[far], d[far], half)
                dep_h.append(h[far])
                dep_e.append(_charged_deposit(material, sp[far], e[far], path, False, rng))
        energy, pos, dirs, hist = energy[alive], pos[alive], dirs[alive], hist[alive]
    if not dep_h:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(dep_h), np.concatenate(dep_e)


def deposit(
    records: PhaseSpace,
    substrate: SubstrateSpec,
    rng: np.random.Generator,
    binning=None,
    *,
    straggling: bool = True,
    keep_events: bool = False,
    photon_cutoff_kev: float = PHOTON_CUTOFF_KEV,
    charged_cutoff_kev: float = CHARGED_CUTOFF_KEV,
) -> DepositSpectrum:
    """Spectrum of per-history energy deposited in the substrate.

    Photons interact through the material's cross sections; their electrons
    lose energy along straight chords to the box surface. Incoming charged
    particles lose energy along their chord, Landau-straggled unless
    ``straggling`` is off. Neutrons deposit nothing (no hadronic physics).

    Raises:
        ValueError: the re-aim sphere recorded on the records does not enclose
            the substrate, the records carry no effective time, or a photon
            lies above the attenuation table.
    """
    half = substrate.half_extents_cm
    radius = records.meta.get("reaim_radius")
    if radius is not None:
        center = np.asarray(records.meta.get("reaim_center", (0.0, 0.0, 0.0)))
        if np.linalg.norm(center) + np.linalg.norm(half) > radius * (1 + 1e-12):
            raise ValueError("re-aim sphere does not enclose the substrate")
    if not records.effective_time_s > 0:
        raise ValueError("records carry no effective time")

    mat = substrate.material
    ids, slot = np.unique(records.history, return_inverse=True)
    edep = np.zeros(ids.size)
    hw = np.zeros(ids.size)
    np.maximum.at(hw, slot, records.weight)

    t_in, t_out, hit = box_interval(records.position, records.direction, half)
    sp = records.species

    charged = hit & np.isin(sp, [int(s) for s in physics.CHARGED_SPECIES])
    if charged.any():
        e = records.energy[charged]
        chord = t_out[charged] - t_in[charged]
        loss = _charged_deposit(mat, sp[charged], e, chord, straggling, rng)
        np.add.at(edep, slot[charged], loss)

    gam = hit & (sp == Species.GAMMA)
    if gam.any():
        top = mat.attenuation_table.energy[-1]
        if records.energy[gam].max() > top:
            raise ValueError(f"photon energy above {top:g} keV is outside the attenuation table")
        h, e = _photon_deposits(mat, records.energy[gam], records.position[gam], records.direction[gam],
                                slot[gam], half, rng, photon_cutoff_kev, charged_cutoff_kev)
        np.add.at(edep, h, e)

    return DepositSpectrum.from_events(edep, hw, records.effective_time_s, binning, keep_events=keep_events)
