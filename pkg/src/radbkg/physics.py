"""Closed-form interaction physics shared by the table generator and the transport code.

Energies are in keV for photons and MeV for charged-particle stopping formulas,
following the conventions of the tabulated data they feed.
"""

import math
from enum import IntEnum

import numpy as np

ELECTRON_MASS_KEV = 510.99895
ELECTRON_MASS_MEV = ELECTRON_MASS_KEV / 1000.0
MUON_MASS_MEV = 105.6583755
PROTON_MASS_MEV = 938.27208816
NEUTRON_MASS_MEV = 939.56542052

CLASSICAL_ELECTRON_RADIUS_CM = 2.8179403262e-13
FINE_STRUCTURE = 7.2973525693e-3
AVOGADRO = 6.02214076e23
# K/2 of the Bethe formula, MeV cm^2 / mol
BETHE_K_HALF = 0.1535375


class Species(IntEnum):
    GAMMA = 0
    ELECTRON = 1
    POSITRON = 2
    MU_MINUS = 3
    MU_PLUS = 4
    PROTON = 5
    NEUTRON = 6

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, name: str) -> "Species":
        try:
            return _BY_LABEL[name.strip().lower()]
        except KeyError:
            raise ValueError(
                f"unknown particle species {name!r}; known: {sorted(_BY_LABEL)}"
            ) from None

    @property
    def mass_mev(self) -> float:
        return _MASSES[self]

    @property
    def charged(self) -> bool:
        return self not in (Species.GAMMA, Species.NEUTRON)


_LABELS = {
    Species.GAMMA: "gamma",
    Species.ELECTRON: "e-",
    Species.POSITRON: "e+",
    Species.MU_MINUS: "mu-",
    Species.MU_PLUS: "mu+",
    Species.PROTON: "proton",
    Species.NEUTRON: "neutron",
}
_BY_LABEL = {v: k for k, v in _LABELS.items()}
_BY_LABEL.update({"p": Species.PROTON, "n": Species.NEUTRON, "photon": Species.GAMMA})
_MASSES = {
    Species.GAMMA: 0.0,
    Species.ELECTRON: ELECTRON_MASS_MEV,
    Species.POSITRON: ELECTRON_MASS_MEV,
    Species.MU_MINUS: MUON_MASS_MEV,
    Species.MU_PLUS: MUON_MASS_MEV,
    Species.PROTON: PROTON_MASS_MEV,
    Species.NEUTRON: NEUTRON_MASS_MEV,
}

CHARGED_SPECIES = (
    Species.ELECTRON,
    Species.POSITRON,
    Species.MU_MINUS,
    Species.MU_PLUS,
    Species.PROTON,
)


# ---------------------------------------------------------------------------
# Klein-Nishina
# ---------------------------------------------------------------------------

def klein_nishina_total(energy_kev):
    """Total Klein-Nishina cross section per free electron (cm^2)."""
    k = np.asarray(energy_kev, dtype=float) / ELECTRON_MASS_KEV
    r2 = CLASSICAL_ELECTRON_RADIUS_CM**2
    lg = np.log1p(2 * k)
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma = 2 * np.pi * r2 * (
            (1 + k) / k**2 * (2 * (1 + k) / (1 + 2 * k) - lg / k)
            + lg / (2 * k)
            - (1 + 3 * k) / (1 + 2 * k) ** 2
        )
    thomson = 8 * np.pi / 3 * r2 * (1 - 2 * k + 5.2 * k**2)
    return np.where(k < 1e-3, thomson, sigma)


def klein_nishina_energy_pdf(energy_kev: float, eps):
    """Density of the scattered energy fraction eps = E'/E, unnormalised.

    Supported on [1/(1+2k), 1]; proportional to d(sigma)/d(eps).
    """
    k = energy_kev / ELECTRON_MASS_KEV
    eps = np.asarray(eps, dtype=float)
    cos_t = 1 - (1 / eps - 1) / k
    sin2 = 1 - cos_t**2
    return (1 / eps + eps) * (1 - eps * sin2 / (1 + eps**2))


def sample_klein_nishina(energy_kev, rng: np.random.Generator):
    """Sample scattered energy fractions eps = E'/E for an array of photon energies.

    Kahn-style rejection: eps is drawn from the 1/eps + eps envelope (mixture of
    two easily inverted pieces) and accepted with probability
    1 - eps sin^2 / (1 + eps^2).

    Returns:
        (eps, cos_theta) arrays of the same shape as the input.
    """
    e = np.atleast_1d(np.asarray(energy_kev, dtype=float))
    k = e / ELECTRON_MASS_KEV
    eps0 = 1.0 / (1.0 + 2.0 * k)
    eps0_sq = eps0**2
    a1 = -np.log(eps0)
    a2 = 0.5 * (1.0 - eps0_sq)
    out = np.empty_like(e)
    pending = np.arange(e.size)
    while pending.size:
        n = pending.size
        r1, r2, r3 = rng.random(n), rng.random(n), rng.random(n)
        first = r1 * (a1[pending] + a2[pending]) < a1[pending]
        eps = np.where(
            first,
            np.exp(-r2 * a1[pending]),
            np.sqrt(eps0_sq[pending] + (1.0 - eps0_sq[pending]) * r2),
        )
        t = (1.0 - eps) / (k[pending] * eps)
        sin2 = t * (2.0 - t)
        accept = r3 <= 1.0 - eps * sin2 / (1.0 + eps**2)
        out[pending[accept]] = eps[accept]
        pending = pending[~accept]
    cos_t = 1.0 - (1.0 - out) / (k * out)
    return out, np.clip(cos_t, -1.0, 1.0)


def mean_scattered_fraction(energy_kev: float, n: int = 20001) -> float:
    """Klein-Nishina mean of E'/E by Simpson quadrature over eps."""
    from scipy.integrate import simpson

    k = energy_kev / ELECTRON_MASS_KEV
    eps = np.linspace(1 / (1 + 2 * k), 1.0, n)
    w = klein_nishina_energy_pdf(energy_kev, eps)
    return float(simpson(eps * w, x=eps) / simpson(w, x=eps))


# ---------------------------------------------------------------------------
# Pair production (nuclear field, unscreened Born approximation)
# ---------------------------------------------------------------------------

def pair_nuclear_per_z2(energy_kev):
    """Pair cross section in the nuclear field divided by Z^2 (cm^2).

    Maximon's threshold expansion below 4 m c^2 and his high-energy series above;
    screening and the triplet channel are neglected.
    """
    k = np.atleast_1d(np.asarray(energy_kev, dtype=float)) / ELECTRON_MASS_KEV
    pref = FINE_STRUCTURE * CLASSICAL_ELECTRON_RADIUS_CM**2
    out = np.zeros_like(k)

    low = (k > 2) & (k < 4)
    kl = k[low]
    eps = (2 * kl - 4) / (2 + kl + 2 * np.sqrt(2 * kl))
    out[low] = (2 * np.pi / 3) * pref * ((kl - 2) / kl) ** 3 * (
        1 + eps / 2 + 23 * eps**2 / 40 + 11 * eps**3 / 60 + 29 * eps**4 / 960
    )

    high = k >= 4
    kh = k[high]
    lg = np.log(2 * kh)
    zeta3 = 1.2020569031595942
    out[high] = pref * (
        28 / 9 * lg
        - 218 / 27
        + (2 / kh) ** 2
        * (6 * lg - 7 / 2 + 2 / 3 * lg**3 - lg**2 - np.pi**2 / 3 * lg + 2 * zeta3 + np.pi**2 / 6)
        - (2 / kh) ** 4 * (3 / 16 * lg + 1 / 8)
        - (2 / kh) ** 6 * (29 / (9 * 256) * lg - 77 / (27 * 512))
    )
    return np.clip(out, 0.0, None)


# ---------------------------------------------------------------------------
# Stopping power
# ---------------------------------------------------------------------------

TWO_LN10 = 2.0 * math.log(10.0)


def plasma_energy_ev(density: float, z_over_a: float) -> float:
    return 28.816 * math.sqrt(density * z_over_a)


def sternheimer_parameters(mean_excitation_ev: float, density: float, z_over_a: float):
    """Density-effect parameters (C, x0, x1, a, k) for a condensed material.

    Uses the general Sternheimer-Peierls prescription, which needs only I and
    the plasma energy.
    """
    c_bar = 2 * math.log(mean_excitation_ev / plasma_energy_ev(density, z_over_a)) + 1
    if mean_excitation_ev < 100:
        x1 = 2.0
        x0 = 0.2 if c_bar < 3.681 else 0.326 * c_bar - 1.0
    else:
        x1 = 3.0
        x0 = 0.2 if c_bar < 5.215 else 0.326 * c_bar - 1.5
    k = 3.0
    a = (c_bar - TWO_LN10 * x0) / (x1 - x0) ** k
    return c_bar, x0, x1, a, k


def density_effect(beta_gamma, params):
    c_bar, x0, x1, a, k = params
    x = np.log10(np.asarray(beta_gamma, dtype=float))
    delta = np.where(x >= x1, TWO_LN10 * x - c_bar, TWO_LN10 * x - c_bar + a * np.clip(x1 - x, 0, None) ** k)
    return np.where(x < x0, 0.0, delta)


def kinematics(kinetic_mev, mass_mev: float):
    """(beta^2, gamma, beta*gamma) for kinetic energy T and rest mass M."""
    gamma = 1.0 + np.asarray(kinetic_mev, dtype=float) / mass_mev
    beta2 = 1.0 - 1.0 / gamma**2
    return beta2, gamma, np.sqrt(gamma**2 - 1.0)


def bethe_heavy(kinetic_mev, mass_mev, z_over_a, mean_excitation_ev, density_params):
    """Mass collision stopping power of a singly charged heavy particle (MeV cm^2/g).

    Bethe formula with the exact maximum energy transfer and density effect.
    Below beta = 0.05 the bracket is replaced by a velocity-proportional
    continuation so the curve stays positive and continuous.
    """
    t = np.asarray(kinetic_mev, dtype=float)
    beta_floor = 0.05

    def _bethe(t_):
        beta2, gamma, bg = kinematics(t_, mass_mev)
        ratio = ELECTRON_MASS_MEV / mass_mev
        tmax = 2 * ELECTRON_MASS_MEV * bg**2 / (1 + 2 * gamma * ratio + ratio**2)
        i_mev = mean_excitation_ev * 1e-6
        bracket = 0.5 * np.log(2 * ELECTRON_MASS_MEV * bg**2 * tmax / i_mev**2) - beta2
        bracket -= density_effect(bg, density_params) / 2
        return 2 * BETHE_K_HALF * z_over_a / beta2 * bracket

    t_floor = mass_mev * (1 / math.sqrt(1 - beta_floor**2) - 1)
    s_floor = float(_bethe(t_floor))
    beta = np.sqrt(kinematics(np.maximum(t, 1e-12), mass_mev)[0])
    return np.where(t >= t_floor, _bethe(np.maximum(t, t_floor)), s_floor * beta / beta_floor)


def electron_collision(kinetic_mev, z_over_a, mean_excitation_ev, density_params, positron=False):
    """Mass collision stopping power of electrons or positrons (MeV cm^2/g)."""
    t = np.asarray(kinetic_mev, dtype=float)
    tau = t / ELECTRON_MASS_MEV
    beta2, _, bg = kinematics(t, ELECTRON_MASS_MEV)
    if positron:
        y = tau + 2
        f = 2 * math.log(2) - beta2 / 12 * (23 + 14 / y + 10 / y**2 + 4 / y**3)
    else:
        f = 1 - beta2 + (tau**2 / 8 - (2 * tau + 1) * math.log(2)) / (tau + 1) ** 2
    i_rel = mean_excitation_ev * 1e-6 / ELECTRON_MASS_MEV
    log_term = np.log(tau**2 * (tau + 2) / (2 * i_rel**2))
    delta = density_effect(bg, density_params)
    return BETHE_K_HALF * z_over_a / beta2 * (log_term + f - delta)


def electron_radiative_fraction(kinetic_mev, z_eff: float):
    """Approximate ratio of radiative to collision stopping for electrons."""
    return (np.asarray(kinetic_mev, dtype=float) + ELECTRON_MASS_MEV) * z_eff / 800.0


def landau_xi_mev(z_over_a: float, areal_density_g_cm2, beta2):
    """Landau width parameter xi (MeV) for a singly charged particle."""
    return BETHE_K_HALF * z_over_a * np.asarray(areal_density_g_cm2) / np.asarray(beta2)
