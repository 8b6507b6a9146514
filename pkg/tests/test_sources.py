import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radbkg.physics import Species
from radbkg.sources import (
    CHAIN_IDS,
    NOMINAL_ACTIVITY,
    CosmicSpeciesModel,
    DecayChain,
    EnvironmentSpec,
    emitted_spectrum,
    load_chains,
    sample_cosmic_primaries,
    sample_decay_emission,
)


def test_line_library_has_key_lines():
    ch = load_chains()
    assert set(ch) == set(CHAIN_IDS)
    k40 = ch["K40"]
    assert k40.energies[np.argmax(k40.intensities)] == pytest.approx(1460.82)
    assert 2614.5 == pytest.approx(ch["Th232b"].energies.max(), abs=0.1)
    assert all(c.energies.max() <= 3000.0 for c in ch.values())


def test_emitted_spectrum_k40_line():
    edges = np.array([1400.0, 1500.0, 1700.0])
    s = emitted_spectrum({"K40": 400.0}, edges)
    assert s[0] == pytest.approx(400.0 * 0.1066)
    assert s[1] == 0.0


def test_emitted_spectrum_scales_linearly():
    edges = np.geomspace(10, 3000, 50)
    one = emitted_spectrum(NOMINAL_ACTIVITY, edges)
    two = emitted_spectrum({k: 2 * v for k, v in NOMINAL_ACTIVITY.items()}, edges)
    np.testing.assert_allclose(two, 2 * one)


def test_emitted_spectrum_rejects_bad_bins():
    with pytest.raises(ValueError):
        emitted_spectrum(NOMINAL_ACTIVITY, [10.0, 5.0, 20.0])


def test_chain_validation():
    with pytest.raises(ValueError):
        DecayChain("X", np.array([100.0]), np.array([1.5]))
    with pytest.raises(ValueError):
        DecayChain("X", np.array([3500.0]), np.array([0.5]))


def test_mean_photons_per_decay(rng):
    ch = load_chains()["U238b"]
    n = 20000
    counts = [len(sample_decay_emission(ch, rng)) for _ in range(n)]
    var = float(np.sum(ch.intensities * (1 - ch.intensities)))
    assert abs(np.mean(counts) - ch.photons_per_decay) < 4 * math.sqrt(var / n)


def test_environment_validation():
    with pytest.raises(ValueError):
        EnvironmentSpec(elevation_m=-1.0)
    with pytest.raises(ValueError):
        EnvironmentSpec(activities={"K40": -1.0})
    with pytest.raises(ValueError):
        EnvironmentSpec(activities={"Co60": 1.0})
    env = EnvironmentSpec(activities={"K40": 800.0})
    assert env.relative_activity("K40") == 2.0 and env.relative_activity("U238a") == 0.0


def _muon(**kw):
    base = dict(species=Species.MU_MINUS, integral_flux=0.01, scale_height_m=5000.0,
                spectrum="offset_power_law", index=2.7, offset_mev=3000.0, e_min_mev=10.0, e_max_mev=1e4)
    base.update(kw)
    return CosmicSpeciesModel(**base)


@given(st.floats(0.0, 4000.0), st.floats(0.0, 4000.0))
def test_cosmic_flux_scales_exactly(h1, h2):
    m = _muon()
    assert m.flux(h2) / m.flux(h1) == pytest.approx(math.exp((h2 - h1) / 5000.0), rel=1e-12)


def test_zenith_sampling_moment(rng):
    m = _muon(zenith_exponent=2.0)
    c = m.sample_cos_zenith(rng, 200_000)
    # density (n+2) c^(n+1) on (0, 1] has mean (n+2)/(n+3)
    assert abs(c.mean() - 4.0 / 5.0) < 4 * c.std() / math.sqrt(c.size)


def test_energy_sampling_range_and_shape(rng):
    m = CosmicSpeciesModel(Species.GAMMA, 0.01, 2500.0, "power_law_cutoff", index=2.0, e_min_mev=1.0, e_max_mev=10.0)
    e = m.sample_energy_mev(rng, 200_000)
    assert e.min() >= 1.0 and e.max() <= 10.0
    # E^-2 on [1, 10]: median is 2 / (1 + 1/10) = 20/11
    assert np.median(e) == pytest.approx(20.0 / 11.0, rel=0.01)


def test_broken_power_law_is_continuous():
    m = CosmicSpeciesModel(Species.NEUTRON, 0.01, 1000.0, "broken_power_law", breaks_mev=(100.0,),
                           indices=(1.0, 2.0))
    lo, hi = m.shape(np.array([100.0 * (1 - 1e-9), 100.0 * (1 + 1e-9)]))
    assert lo == pytest.approx(hi, rel=1e-6)


def test_cosmic_primary_set(rng):
    models = [_muon(), _muon(species=Species.MU_PLUS, integral_flux=0.03)]
    env = EnvironmentSpec()
    ps = sample_cosmic_primaries(models, env, 50_000, rng, generation_area_cm2=1e4)
    assert np.all(ps.direction[:, 2] < 0)
    assert ps.effective_time_s == pytest.approx(50_000 / (0.04 * 1e4))
    frac = np.mean(ps.species == Species.MU_PLUS)
    assert abs(frac - 0.75) < 4 * math.sqrt(0.75 * 0.25 / 50_000)


def test_cosmic_needs_a_species(rng):
    with pytest.raises(ValueError):
        sample_cosmic_primaries([], EnvironmentSpec(), 10, rng)
