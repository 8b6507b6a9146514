import math

import numpy as np
import pytest

from radbkg.deposition import SubstrateSpec, box_interval
from radbkg.phasespace import PhaseSpace
from radbkg.reaiming import ReaimTarget, leading_records, orthonormal_basis, reaim

AREA = 1.0e6  # cm^2
FLUX = 0.01  # cm^-2 s^-1 through the horizontal plane


def plane_source(rng, n, cos_sampler):
    c = cos_sampler(rng, n)
    phi = rng.uniform(0, 2 * np.pi, n)
    s = np.sqrt(1 - c * c)
    d = np.column_stack([s * np.cos(phi), s * np.sin(phi), -c])
    side = math.sqrt(AREA)
    pos = np.column_stack([(rng.random((n, 2)) - 0.5) * side, np.full(n, 50.0)])
    return PhaseSpace(np.zeros(n), np.full(n, 1000.0), pos, d, np.ones(n), np.arange(n), n / (FLUX * AREA), AREA)


def through_rate(ps, half):
    _, _, hit = box_interval(ps.position, ps.direction, half)
    w = ps.weight * hit
    t = ps.effective_time_s
    return w.sum() / t, math.sqrt(np.sum(w * w)) / t


def test_uniform_vertical_beam(rng):
    sub = SubstrateSpec("Si", 500.0, 10.0, 10.0)
    half = sub.half_extents_cm
    ps = plane_source(rng, 100_000, lambda r, n: np.ones(n))
    out = reaim(ps, ReaimTarget.around(half, AREA), rng)
    rate, err = through_rate(out, half)
    assert abs(rate - FLUX * 1.0) < 3 * err


def test_isotropic_hemisphere(rng):
    sub = SubstrateSpec("Si", 2000.0, 10.0, 3.0)
    a, b, t = 2 * sub.half_extents_cm
    half = sub.half_extents_cm
    # isotropic intensity: plane-crossing cosines have density 2c
    ps = plane_source(rng, 100_000, lambda r, n: np.sqrt(1.0 - r.random(n)))
    out = reaim(ps, ReaimTarget.around(half, AREA), rng)
    rate, err = through_rate(out, half)
    assert abs(rate - FLUX * (a * b + a * t + b * t)) < 3 * err


def test_effective_time_ratio_exact(rng):
    ps = plane_source(rng, 10, lambda r, n: np.ones(n))
    tgt = ReaimTarget((0, 0, 0), 2.0, AREA)
    out = reaim(ps, tgt, rng)
    assert out.effective_time_s == ps.effective_time_s * AREA / (math.pi * 4.0)
    assert out.meta["reaim_radius"] == 2.0


def test_histories_move_rigidly(rng):
    n = 6
    d = np.tile([0.0, 0.6, -0.8], (n, 1))
    pos = rng.normal(size=(n, 3)) * 100
    ps = PhaseSpace(np.zeros(n), [5.0, 900.0, 1.0, 2.0, 3.0, 800.0], pos, d, np.ones(n), [0, 0, 0, 1, 1, 1], 1.0, AREA)
    out = reaim(ps, ReaimTarget((0, 0, 0), 1.0, AREA), rng)
    for h in (0, 1):
        m = ps.history == h
        shift = out.position[m] - ps.position[m]
        np.testing.assert_allclose(shift, shift[0:1].repeat(m.sum(), 0), atol=1e-9)
    np.testing.assert_array_equal(out.direction, ps.direction)
    np.testing.assert_array_equal(out.energy, ps.energy)
    # leading records pass within the disc
    _, lead = leading_records(ps.history, ps.energy)
    p, u = out.position[lead], out.direction[lead]
    closest = p - np.sum(p * u, axis=1)[:, None] * u
    assert np.all(np.linalg.norm(closest, axis=1) <= 1.0 + 1e-12)
    np.testing.assert_allclose(out.weight, 1.0 / 0.8)


def test_leading_record_selection():
    ids, lead = leading_records(np.array([3, 1, 3, 1]), np.array([5.0, 1.0, 7.0, 2.0]))
    assert list(ids) == [1, 3] and list(lead) == [3, 2]


def test_target_validation():
    with pytest.raises(ValueError):
        ReaimTarget((0, 0, 0), 0.0, 1.0)
    with pytest.raises(ValueError):
        ReaimTarget((0, 0, 0), 10.0, 100.0)


def test_basis_is_orthonormal(rng):
    u = rng.normal(size=(100, 3))
    u /= np.linalg.norm(u, axis=1)[:, None]
    e1, e2 = orthonormal_basis(u)
    for a, b in ((u, e1), (u, e2), (e1, e2)):
        np.testing.assert_allclose(np.sum(a * b, axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(e2, axis=1), 1.0)
