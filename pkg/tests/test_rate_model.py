import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from radbkg.deposition import SubstrateSpec
from radbkg.materials import load_material
from radbkg.rate_model import (
    SOURCE_IDS,
    RateTriple,
    ScaleHeightModel,
    SourceParams,
    compute_rates,
    correction_factors,
    eq1_terms,
    rate_breakdown,
    shape_factor,
    source_rates,
    thin_limit,
)
from radbkg.sources import CHAIN_IDS, NOMINAL_ACTIVITY, EnvironmentSpec

# Parameter table typed in independently of the package defaults
C = [2.2, 0.6, 1.5, 0.02, 1.9, 40.0]
G = [6.8, 4.9, 6.6, 0.6, 11.7, 1.4]
P = [1.4, 0.5, 0.9, 0.03, 1.4, 8.0]
M = [15, 2, 20, 0, 13, 180]

MATERIALS = ["Si", "SiC", "SiO2", "Al2O3", "GaN", "GaAs"]


def si(thickness=500.0, w=10.0, l=10.0):
    return SubstrateSpec("Si", thickness, w, l)


def test_defaults_match_table():
    params = SourceParams()
    assert [params[s].c * 1e3 for s in SOURCE_IDS] == pytest.approx(C, rel=1e-12)
    assert [params[s].g * 1e3 for s in SOURCE_IDS] == pytest.approx(G, rel=1e-12)
    assert [params[s].m * 1e6 for s in SOURCE_IDS] == pytest.approx(M, rel=1e-12)
    assert [params[s].beta for s in SOURCE_IDS] == [1.12] * 5 + [1.0]
    assert [params[s].alpha for s in SOURCE_IDS] == [5.0] * 5 + [1.8]
    assert [params[s].rho_ga for s in CHAIN_IDS] == [2.0, 4.0, 4.0, 15.0, 4.0]


def test_nominal_totals():
    r = compute_rates(si(), EnvironmentSpec())
    assert r.R == pytest.approx(math.fsum(C + G) * 1e-3, rel=1e-12)
    assert r.P == pytest.approx(math.fsum(P), rel=1e-12)
    assert r.M == pytest.approx(math.fsum(M) * 1e-6, rel=1e-12)
    assert (round(r.R * 1e3, 2), round(r.P, 2), round(r.M * 1e6)) == (78.22, 12.23, 230)


def test_thin_limit():
    r = thin_limit(EnvironmentSpec())
    assert r.R == pytest.approx(46.22e-3, rel=1e-12)
    assert r.P == 0.0 and r.M == 0.0
    assert thin_limit(EnvironmentSpec(), area_mm2=0.0) == RateTriple(0.0, 0.0, 0.0)
    # approaches the limit from above
    assert compute_rates(si(0.5), EnvironmentSpec()).R == pytest.approx(r.R, rel=1e-3)


def test_nominal_corrections_are_unity():
    for s in SOURCE_IDS:
        for q in "RPM":
            assert correction_factors(si(), EnvironmentSpec(), s, q) == (1.0, 1.0, 1.0)


def test_strip_shape_anchors():
    strip = si(w=10.0, l=1.0)
    assert correction_factors(strip, EnvironmentSpec(), "CR", "R")[1] == pytest.approx(1.20)
    assert correction_factors(strip, EnvironmentSpec(), "CR", "P")[1] == pytest.approx(0.97)
    assert correction_factors(strip, EnvironmentSpec(), "CR", "M")[1] == 1.0
    assert shape_factor(0.65, "R") == pytest.approx(1.10)
    assert shape_factor(100.0, "P") == 0.0


def test_ceiling_correction():
    env = EnvironmentSpec(ceiling_cm=40.0)
    assert correction_factors(si(), env, "CR", "R")[0] == pytest.approx(0.9604, rel=1e-12)
    assert correction_factors(si(), env, "K40", "R")[0] == 1.0


def test_density_rules():
    alo = SubstrateSpec("Al2O3", 500.0)
    rel = load_material("Al2O3").density / 2.329
    assert correction_factors(alo, EnvironmentSpec(), "K40", "R")[2] == pytest.approx(rel, rel=1e-3)
    assert correction_factors(alo, EnvironmentSpec(), "CR", "P")[2] == pytest.approx(rel, rel=1e-3)
    assert correction_factors(alo, EnvironmentSpec(), "CR", "R")[2] == 1.0
    assert correction_factors(alo, EnvironmentSpec(), "CR", "M")[2] == pytest.approx(rel**2.7, rel=1e-3)
    gaas = SubstrateSpec("GaAs", 500.0)
    rho = load_material("GaAs").density
    assert correction_factors(gaas, EnvironmentSpec(), "U238a", "P")[2] == pytest.approx((rho + 15.0) / 2.329)


def test_gallium_replaces_cosmic_slope():
    gaas = SubstrateSpec("GaAs", 1000.0)
    cr = source_rates(gaas, EnvironmentSpec(), "CR")
    ksh = cr.kappas["R"][1]
    assert cr.rates.R == pytest.approx((40e-3 + 7e-3 * 2.0) * ksh, rel=1e-12)


def test_split_scale_mode():
    split = ScaleHeightModel("split")
    assert split.factor(0.0) == pytest.approx(1.0)
    local = 1.0 / ((0.5 / 5000 + 0.3 / 1000 + 0.2 / 2500))
    assert local == pytest.approx(2083.3, rel=1e-4)
    h = 1.0
    assert math.log(split.factor(h)) / h == pytest.approx(1.0 / local, rel=1e-3)
    with pytest.raises(ValueError):
        ScaleHeightModel("split", split_weights=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        ScaleHeightModel("both")


def test_unknown_source_or_quantity():
    with pytest.raises(ValueError):
        correction_factors(si(), EnvironmentSpec(), "Co60", "R")
    with pytest.raises(ValueError):
        correction_factors(si(), EnvironmentSpec(), "K40", "Q")


def test_rate_triple_rejects_negative():
    with pytest.raises(ValueError):
        RateTriple(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        eq1_terms(SourceParams()["K40"], -0.1)


# --- properties --------------------------------------------------------------

thickness = st.floats(1.0, 3000.0)
side = st.floats(0.5, 50.0)
material = st.sampled_from(MATERIALS)
elevation = st.floats(0.0, 5000.0)
ceiling = st.floats(0.0, 100.0)
strength = st.floats(0.0, 5.0)


def env_from(h, d, scales):
    return EnvironmentSpec(h, d, 1.0, {c: NOMINAL_ACTIVITY[c] * a for c, a in zip(CHAIN_IDS, scales)})


envs = st.builds(env_from, elevation, ceiling, st.lists(strength, min_size=5, max_size=5))


@pytest.mark.property
@given(material, thickness, side, side, envs, st.floats(1.05, 20.0))
def test_linear_in_area(mat, t, w, l, env, k):
    # a second rectangle with the same side/top descriptor (w+l)/(wl) but a different area
    s = (w + l) / (w * l)
    w2 = k * max(w, l)
    l2 = w2 / (s * w2 - 1.0)
    a = compute_rates(SubstrateSpec(mat, t, w, l), env)
    b = compute_rates(SubstrateSpec(mat, t, w2, l2), env)
    ratio = (w2 * l2) / (w * l)
    for q in "RPM":
        assert getattr(b, q) == pytest.approx(getattr(a, q) * ratio, rel=1e-9, abs=1e-300)


@pytest.mark.property
@given(material, thickness, side, side, envs, st.sampled_from(CHAIN_IDS), st.floats(0.0, 10.0))
def test_linear_in_activity(mat, t, w, l, env, chain, k):
    sub = SubstrateSpec(mat, t, w, l)
    one = source_rates(sub, env, chain).rates
    acts = dict(env.activities)
    acts[chain] *= k
    env2 = EnvironmentSpec(env.elevation_m, env.ceiling_cm, env.aluminum_cm, acts)
    two = source_rates(sub, env2, chain).rates
    for q in "RPM":
        assert getattr(two, q) == pytest.approx(getattr(one, q) * k, rel=1e-12, abs=1e-300)


@pytest.mark.property
@given(material, thickness, thickness, side, side, envs)
def test_monotone_in_thickness(mat, t1, t2, w, l, env):
    lo, hi = sorted((t1, t2))
    a = compute_rates(SubstrateSpec(mat, lo, w, l), env)
    b = compute_rates(SubstrateSpec(mat, hi, w, l), env)
    for q in "RPM":
        assert getattr(b, q) >= getattr(a, q) * (1 - 1e-12)


@pytest.mark.property
@given(material, thickness, side, side, envs, st.sampled_from(CHAIN_IDS), st.floats(0.0, 3.0))
def test_monotone_in_activity(mat, t, w, l, env, chain, extra):
    sub = SubstrateSpec(mat, t, w, l)
    acts = dict(env.activities)
    acts[chain] += extra * NOMINAL_ACTIVITY[chain]
    more = compute_rates(sub, EnvironmentSpec(env.elevation_m, env.ceiling_cm, env.aluminum_cm, acts))
    base = compute_rates(sub, env)
    for q in "RPM":
        assert getattr(more, q) >= getattr(base, q) * (1 - 1e-12)


@pytest.mark.property
@given(material, thickness, side, side, envs, elevation, st.sampled_from(["single", "split"]))
def test_monotone_in_elevation(mat, t, w, l, env, dh, mode):
    sub = SubstrateSpec(mat, t, w, l)
    scale = ScaleHeightModel(mode)
    up = EnvironmentSpec(env.elevation_m + dh, env.ceiling_cm, env.aluminum_cm, env.activities)
    a, b = compute_rates(sub, env, scale=scale), compute_rates(sub, up, scale=scale)
    for q in "RPM":
        assert getattr(b, q) >= getattr(a, q) * (1 - 1e-12)


@pytest.mark.property
@given(material, thickness, side, side, envs)
def test_r_at_least_m(mat, t, w, l, env):
    r = compute_rates(SubstrateSpec(mat, t, w, l), env)
    assert r.R >= r.M >= 0 and r.P >= 0


@pytest.mark.property
@given(material, thickness, side, side, envs, elevation, elevation, st.floats(500.0, 20000.0))
def test_cosmic_scales_exactly_with_elevation(mat, t, w, l, env, h1, h2, lam):
    sub = SubstrateSpec(mat, t, w, l)
    scale = ScaleHeightModel(lambda_m=lam)
    at = lambda h: source_rates(sub, EnvironmentSpec(h, env.ceiling_cm, 1.0, env.activities), "CR", scale=scale)
    a, b = at(h1).rates, at(h2).rates
    for q in "RPM":
        if getattr(a, q) > 0:
            assert getattr(b, q) / getattr(a, q) == pytest.approx(math.exp((h2 - h1) / lam), rel=1e-12)


@pytest.mark.property
@given(thickness, side, side, st.lists(strength, min_size=5, max_size=5))
def test_silicon_reproduces_uncorrected_arithmetic(t, w, l, scales):
    env = env_from(0.0, 20.0, scales)
    sub = SubstrateSpec("Si", t, w, l)
    for s, a in zip(SOURCE_IDS, list(scales) + [1.0]):
        bd = source_rates(sub, env, s)
        assert bd.kappas["R"][2] == 1.0 and bd.kappas["P"][2] == 1.0 and bd.kappas["M"][2] == 1.0
        raw = eq1_terms(SourceParams()[s], t / 500.0)
        area = w * l / 100.0
        assert bd.rates.R == pytest.approx(raw.R * bd.kappas["R"][1] * a * area, rel=1e-14)
        assert bd.rates.P == pytest.approx(raw.P * bd.kappas["P"][1] * a * area, rel=1e-14)


def test_docstring_examples():
    import doctest

    import radbkg.rate_model

    assert doctest.testmod(radbkg.rate_model).failed == 0
