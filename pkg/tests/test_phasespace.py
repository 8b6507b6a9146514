import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radbkg.phasespace import PhaseSpace, PhaseSpaceRecord, concatenate, read_csv, write_csv
from radbkg.physics import Species


def random_set(rng, n, area=100.0):
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return PhaseSpace(rng.integers(0, 7, n), rng.uniform(1, 1e6, n), rng.normal(size=(n, 3)) * 10, d,
                      rng.uniform(0.1, 3, n), np.sort(rng.integers(0, n, n)), 12.5, area)


def test_record_validation():
    with pytest.raises(ValueError):
        PhaseSpaceRecord(Species.GAMMA, 0.0, (0, 0, 0), (0, 0, 1))
    with pytest.raises(ValueError):
        PhaseSpaceRecord(Species.GAMMA, 10.0, (0, 0, 0), (0, 0, 2))
    with pytest.raises(ValueError):
        PhaseSpaceRecord(Species.GAMMA, 10.0, (0, 0, 0), (0, 0, 1), weight=-1.0)


@pytest.mark.property
@given(st.integers(0, 50), st.integers(0, 2**32 - 1))
def test_csv_round_trip_is_bit_identical(n, seed):
    import tempfile
    from pathlib import Path

    ps = random_set(np.random.default_rng(seed), n)
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "ps.csv"
        write_csv(ps, p)
        back = read_csv(p)
        write_csv(back, Path(d) / "again.csv")
        assert p.read_bytes() == (Path(d) / "again.csv").read_bytes()
    for name in ("species", "energy", "position", "direction", "weight", "history"):
        np.testing.assert_array_equal(getattr(back, name), getattr(ps, name))
    assert back.effective_time_s == ps.effective_time_s


def test_nine_column_files_are_one_history_per_row(tmp_path):
    p = tmp_path / "old.csv"
    p.write_text("# radbkg-phsp v1 effective_time_s=2.0 generation_area_cm2=4.0\n"
                 "gamma,100.0,0,0,0,0,0,-1,1.0\ne-,50.0,1,1,1,0,0,1,1.0\n")
    ps = read_csv(p)
    assert list(ps.history) == [0, 1] and ps.species[1] == Species.ELECTRON


def test_reader_rejects_wrong_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("# something else\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_concatenate_keeps_histories_distinct(rng):
    a, b = random_set(rng, 20), random_set(rng, 30)
    a.meta["n_histories"] = 100
    m = concatenate([a, b])
    assert m.effective_time_s == pytest.approx(25.0)
    assert m.n_histories == a.n_histories + b.n_histories
    assert m.history[len(a):].min() >= 100


def test_concatenate_rejects_mixed_areas(rng):
    with pytest.raises(ValueError):
        concatenate([random_set(rng, 3, 1.0), random_set(rng, 3, 2.0)])


def test_records_round_trip(rng):
    ps = random_set(rng, 5)
    ps.species[:] = 0
    back = PhaseSpace.from_records(ps.records(), ps.effective_time_s, ps.generation_area_cm2, ps.history)
    np.testing.assert_array_equal(back.energy, ps.energy)
