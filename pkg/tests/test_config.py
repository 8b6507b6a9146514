import pytest

from radbkg.config import ConfigError, dump_config, load_config, parse_config, parse_quantity
from radbkg.physics import Species
from radbkg.rate_model import compute_rates


def test_defaults_are_nominal():
    cfg = load_config(None)
    s = cfg.substrate
    assert (s.material.name, s.thickness_um, s.width_mm, s.length_mm) == ("Si", 500.0, 10.0, 10.0)
    assert cfg.environment.ceiling_cm == 20.0 and cfg.environment.elevation_m == 0.0
    assert cfg.scale.mode == "single" and cfg.scale.lambda_m == 2000.0
    assert len(cfg.cosmic_models) == 7


@pytest.mark.parametrize("text, unit, value", [
    ("0.5 mm", "um", 500.0),
    ("1 km", "m", 1000.0),
    ("3 ft", "cm", 91.44),
    ("400 Bq/kg", "Bq/kg", 400.0),
    ("1e8 cm^2", "cm^2", 1e8),
    ("2 MeV", "keV", 2000.0),
])
def test_units_are_converted(text, unit, value):
    assert parse_quantity(text, unit, "k") == pytest.approx(value)


def test_bare_numbers_and_wrong_dimensions_are_rejected():
    with pytest.raises(ConfigError) as e:
        parse_quantity("500", "um", "substrate.thickness")
    assert e.value.key == "substrate.thickness"
    with pytest.raises(ConfigError):
        parse_quantity("5 s", "um", "substrate.thickness")
    with pytest.raises(ConfigError):
        parse_quantity("five", "", "mc.sphere_margin")


def test_overrides_apply_and_convert():
    cfg = parse_config("[substrate]\nthickness = 0.25 mm\nmaterial = GaAs\n[environment]\nelevation = 1.5 km\n")
    assert cfg.substrate.thickness_um == pytest.approx(250.0)
    assert cfg.substrate.material.name == "GaAs"
    assert cfg.environment.elevation_m == pytest.approx(1500.0)
    assert cfg.substrate.width_mm == 10.0  # untouched default


@pytest.mark.parametrize("text, key", [
    ("[substrate]\nthicknes = 500 um\n", "substrate.thicknes"),
    ("[substrat]\n", "substrat"),
    ("[substrate]\nthickness = 500\n", "substrate.thickness"),
    ("[substrate]\nmaterial = unobtainium\n", "substrate.material"),
    ("[cosmic.pion]\nflux = 1 1/cm^2/s\n", "cosmic.pion"),
    ("[params.Co60]\nc = 1 1/s\n", "params.Co60"),
    ("[mc]\nhistories = 2.5\n", "mc.histories"),
    ("[mc]\nstraggling = maybe\n", "mc.straggling"),
    ("[environment]\nfloor = 0 cm\n", "environment.floor"),
])
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert e.value.key == key
    assert key in str(e.value)


def test_unknown_material_lists_known_ones():
    with pytest.raises(ConfigError) as e:
        parse_config("[substrate]\nmaterial = Ge\n")
    for name in ("Si", "GaAs", "Al2O3"):
        assert name in str(e.value)


def test_param_overrides_reach_the_rate_model():
    cfg = parse_config("[params.CR]\nc = 0.05 1/s\n")
    base = compute_rates(load_config(None).substrate, load_config(None).environment)
    new = compute_rates(cfg.substrate, cfg.environment, cfg.params, cfg.scale)
    assert new.R - base.R == pytest.approx(0.01)


def test_species_can_be_disabled():
    cfg = parse_config("[cosmic.neutron]\nenabled = false\n")
    assert Species.NEUTRON not in {m.species for m in cfg.cosmic_models}


def test_dump_round_trip_is_identical():
    cfg = parse_config("[substrate]\nthickness = 123.4 um\nwidth = 3 mm\n[cosmic]\nscale_mode = split\n"
                       "[cosmic.gamma]\nenabled = false\n[params.K40]\ng = 1e-2 1/s\n[mc]\nchunk = 777\n")
    text = dump_config(cfg)
    again = parse_config(text)
    assert dump_config(again) == text
    assert again == cfg


def test_load_config_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "nope.ini")
