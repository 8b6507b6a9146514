"""Regenerate the interaction tables shipped in src/radbkg/data.

Photoelectric cross sections come from the Elam et al. compilation as packaged
by ``xraydb`` (valid to 800 keV; extrapolated log-log above). Compton uses the
free-electron Klein-Nishina cross section scaled below 300 keV by the Elam
bound-electron incoherent ratio. Pair production uses the unscreened Maximon
expansions. Stopping powers come from the Bethe and Rohrlich-Carlson formulas
in ``radbkg.physics``.

    pip install xraydb
    python tools/make_tables.py
"""

from pathlib import Path

import numpy as np
import xraydb

from radbkg import materials, physics
from radbkg.materials import Table, write_table
from radbkg.physics import Species

DATA = Path(__file__).resolve().parents[1] / "src" / "radbkg" / "data"
VERSION = "1"
PHOTON_PER_DECADE = 50
CHARGED_PER_DECADE = 40
ELAM_MAX_KEV = 800.0
BOUND_JOIN_KEV = 300.0


def photon_grid(elements):
    lo, hi = np.log10(materials.PHOTON_RANGE_KEV)
    grid = list(np.logspace(lo, hi, int(round((hi - lo) * PHOTON_PER_DECADE)) + 1))
    for el in elements:
        for edge in xraydb.xray_edges(el).values():
            e_kev = edge.energy / 1000.0
            if materials.PHOTON_RANGE_KEV[0] < e_kev < 900.0:
                grid += [e_kev * (1 - 1e-5), e_kev * (1 + 1e-5)]
    grid = np.unique(np.round(grid, 10))
    return grid


def photoelectric(el, e_kev):
    e_ev = e_kev * 1000.0
    inside = e_kev <= ELAM_MAX_KEV
    out = np.empty_like(e_kev)
    out[inside] = xraydb.mu_elam(el, e_ev[inside], kind="photo")
    e1, e2 = 500.0, ELAM_MAX_KEV
    p1, p2 = xraydb.mu_elam(el, np.array([e1 * 1000, e2 * 1000]), kind="photo")
    slope = np.log(p2 / p1) / np.log(e2 / e1)
    out[~inside] = p2 * (e_kev[~inside] / e2) ** slope
    return out


def compton(el, e_kev):
    z, a, _ = materials.ATOMIC[el]
    kn = physics.klein_nishina_total(e_kev) * z * physics.AVOGADRO / a
    low = e_kev <= BOUND_JOIN_KEV
    incoh = xraydb.mu_elam(el, e_kev[low] * 1000.0, kind="incoh")
    ratio = np.minimum(incoh / kn[low], 1.0)
    join = xraydb.mu_elam(el, np.array([BOUND_JOIN_KEV * 1000.0]), kind="incoh")[0]
    join /= physics.klein_nishina_total(BOUND_JOIN_KEV) * z * physics.AVOGADRO / a
    # taper the bound correction smoothly to 1 at the join energy
    ratio = ratio / min(join, 1.0)
    out = kn.copy()
    out[low] *= np.minimum(ratio, 1.0)
    return out


def pair(el, e_kev):
    z, a, _ = materials.ATOMIC[el]
    return physics.pair_nuclear_per_z2(e_kev) * z**2 * physics.AVOGADRO / a


def attenuation(name):
    density, fractions, _ = materials.definition(name)
    grid = photon_grid(fractions)
    cols = np.zeros((grid.size, 3))
    for el, w in fractions.items():
        cols[:, 0] += w * photoelectric(el, grid)
        cols[:, 1] += w * compton(el, grid)
        cols[:, 2] += w * pair(el, grid)
    # keep the table strictly positive below the pair threshold
    cols[:, 2] = np.maximum(cols[:, 2], 1e-30)
    header = {
        "material": name,
        "kind": "attenuation",
        "species": "gamma",
        "units": "keV,cm2/g",
        "version": VERSION,
        "density_g_cm3": f"{density}",
    }
    comments = [
        "photoelectric: Elam et al. via xraydb (<= 800 keV), log-log extrapolated above",
        "compton: Klein-Nishina free-electron x Z, Elam bound-electron ratio below 300 keV",
        "pair: Maximon unscreened nuclear-field series, triplet neglected",
        "composition (mass fraction): " + " ".join(f"{el}:{w:.6f}" for el, w in fractions.items()),
    ]
    write_table(
        DATA / "attenuation" / f"{name}.csv",
        header,
        Table(grid, cols, ("photoelectric", "compton", "pair")),
        comments,
    )


def stopping(name):
    density, fractions, i_ev = materials.definition(name)
    z_over_a = sum(w * materials.ATOMIC[el][0] / materials.ATOMIC[el][1] for el, w in fractions.items())
    z_eff = sum(w * materials.ATOMIC[el][0] ** 2 / materials.ATOMIC[el][1] for el, w in fractions.items()) / z_over_a
    dparams = physics.sternheimer_parameters(i_ev, density, z_over_a)
    lo, hi = np.log10(materials.CHARGED_RANGE_MEV)
    grid = np.logspace(lo, hi, int(round((hi - lo) * CHARGED_PER_DECADE)) + 1)
    tables = {
        "electron": physics.electron_collision(grid, z_over_a, i_ev, dparams)
        * (1 + physics.electron_radiative_fraction(grid, z_eff)),
        "positron": physics.electron_collision(grid, z_over_a, i_ev, dparams, positron=True)
        * (1 + physics.electron_radiative_fraction(grid, z_eff)),
        "muon": physics.bethe_heavy(grid, physics.MUON_MASS_MEV, z_over_a, i_ev, dparams),
        "proton": physics.bethe_heavy(grid, physics.PROTON_MASS_MEV, z_over_a, i_ev, dparams),
    }
    species = {"electron": "e-", "positron": "e+", "muon": "mu-,mu+", "proton": "proton"}
    for stem, values in tables.items():
        header = {
            "material": name,
            "kind": "stopping",
            "species": species[stem],
            "units": "MeV,MeV*cm2/g",
            "version": VERSION,
            "I_eV": f"{i_ev:.2f}",
        }
        comments = [
            "Bethe (heavy) / Rohrlich-Carlson (e-,e+) collision stopping, Sternheimer-Peierls density effect",
            "e-/e+ include an approximate radiative term (T+mc^2) Zeff/800 x collision",
        ]
        write_table(
            DATA / "stopping" / f"{name}_{stem}.csv",
            header,
            Table(grid, values[:, None], ("stopping",)),
            comments,
        )


def main():
    for name in materials.known_materials():
        attenuation(name)
        stopping(name)
        print("wrote", name)


if __name__ == "__main__":
    main()
