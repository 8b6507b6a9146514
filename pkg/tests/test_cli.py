import io
import json
import subprocess
import sys

import pytest

from radbkg.cli import main
from radbkg.config import parse_config


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


@pytest.fixture
def small_ini(tmp_path):
    p = tmp_path / "small.ini"
    p.write_text(f"[mc]\nchunk = 500\ngeneration_area = 400 cm^2\n[output]\ndirectory = {tmp_path}\n")
    return p


def test_estimate_nominal_json():
    code, text = run("estimate", "--json")
    assert code == 0
    rep = json.loads(text)
    assert rep["total"]["R"] == pytest.approx(78.22e-3, rel=1e-12)
    assert rep["total"]["P"] == pytest.approx(12.23, rel=1e-12)
    assert rep["total"]["M"] == pytest.approx(230e-6, rel=1e-12)
    assert [s["source"] for s in rep["sources"]] == ["K40", "Th232a", "Th232b", "U238a", "U238b", "CR"]
    assert rep["sources"][0]["kappa"]["R"] == {"c": 1.0, "sh": 1.0, "rho": 1.0}


def test_estimate_text_report():
    code, text = run("estimate")
    assert code == 0
    assert "R = 0.07822 1/s" in text and "kappa" in text


def test_half_area_halves_rates(tmp_path):
    p = tmp_path / "half.ini"
    # a smaller wafer has more side area per top area, so R and P are halved
    # up to the change in kappa_sh; M carries no shape factor and halves exactly
    p.write_text("[substrate]\nwidth = 7.0710678118654755 mm\nlength = 7.0710678118654755 mm\n")
    _, full = run("estimate", "--json")
    code, half = run("estimate", "--json", "--config", str(p))
    assert code == 0
    f, h = json.loads(full), json.loads(half)
    for q in "RPM":
        want = sum(s[q] * 0.5 * (hs["kappa"][q]["sh"] / s["kappa"][q]["sh"])
                   for s, hs in zip(f["sources"], h["sources"]))
        assert h["total"][q] == pytest.approx(want, rel=1e-12)
    assert h["total"]["M"] == pytest.approx(0.5 * f["total"]["M"], rel=1e-12)


def test_unknown_material_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[substrate]\nmaterial = Ge\n")
    code, _ = run("estimate", "--config", str(p))
    err = capsys.readouterr().err
    assert code == 2
    assert "substrate.material" in err and "GaAs" in err and "Si" in err


def test_unknown_key_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[environment]\nelevaton = 5 m\n")
    assert run("estimate", "--config", str(p))[0] == 2
    assert "environment.elevaton" in capsys.readouterr().err


def test_missing_config_exit_4(tmp_path):
    assert run("estimate", "--config", str(tmp_path / "none.ini"))[0] == 4


def test_multi_parameter_sweep_refused(capsys):
    code, _ = run("sweep", "--param", "thickness", "--param", "elevation", "--values", "1,2,3", "--unit", "um")
    assert code == 2
    assert "one parameter at a time" in capsys.readouterr().err
    assert run("sweep", "--param", "thickness,elevation", "--values", "1,2,3", "--unit", "um")[0] == 2


def test_sweep_needs_unit():
    assert run("sweep", "--param", "thickness", "--values", "1,2,3")[0] == 2


def test_thickness_sweep_recovers_gamma_exponent():
    code, text = run("sweep", "--json", "--param", "thickness", "--values", "1,3,10,30,100,300,500,1500",
                     "--unit", "um")
    assert code == 0
    rep = json.loads(text)
    fit = next(f for f in rep["fits"] if f["column"] == "P_gamma")
    assert fit["parameters"]["exponent"] == pytest.approx(1.12, abs=1e-12)
    assert rep["rows"][6]["R"] == pytest.approx(78.22e-3)


def test_elevation_sweep_recovers_scale_height():
    code, text = run("sweep", "--json", "--param", "elevation", "--values", "0,0.5,1,1.5,2,3", "--unit", "km")
    rep = json.loads(text)
    fit = next(f for f in rep["fits"] if f["column"] == "R_CR")
    assert fit["parameters"]["scale_height"] == pytest.approx(2000.0, rel=1e-9)


def test_material_and_size_sweeps(tmp_path):
    out = tmp_path / "t.csv"
    code, _ = run("sweep", "--param", "material", "--values", "Si,GaAs", "--output", str(out))
    assert code == 0 and out.read_text().startswith("value,R,P,M")
    code, text = run("sweep", "--json", "--param", "size", "--values", "10x10,10x1", "--unit", "mm")
    rows = json.loads(text)["rows"]
    assert rows[1]["value"] == "10x1"
    assert run("sweep", "--param", "material", "--values", "Si,Ge")[0] == 2


def test_print_params_and_flags_before_subcommand():
    code, text = run("--print-params")
    assert code == 0 and json.loads(text)["CR"]["c"] == 0.04
    code, text = run("--json", "estimate")
    assert json.loads(text)["total"]["R"] == pytest.approx(78.22e-3)


def test_dump_config_round_trip(small_ini):
    code, text = run("--dump-config", "--config", str(small_ini))
    assert code == 0
    assert parse_config(text) == parse_config(small_ini.read_text())


def test_simulate_is_bit_identical(small_ini, tmp_path):
    outs = []
    for threads, sub in ((1, "a"), (3, "b")):
        d = tmp_path / sub
        code, text = run("simulate", "--stage", "cosmic", "-n", "2000", "--seed", "42", "--threads", str(threads),
                         "--config", str(small_ini), "--output", str(d), "--json")
        assert code == 0
        rep = json.loads(text)
        outs.append((d / "radbkg_cosmic_phsp.csv").read_bytes() + (d / "radbkg_cosmic_spectrum.csv").read_bytes())
        assert rep["rates"]["R"] >= rep["rates"]["M"]
    assert outs[0] == outs[1]


def test_simulate_keep_events_reports_exact_power(small_ini, tmp_path):
    code, text = run("simulate", "--stage", "cosmic", "-n", "1000", "--keep-events", "--json",
                     "--config", str(small_ini), "--output", str(tmp_path))
    rep = json.loads(text)
    assert abs(rep["rates"]["P"] - rep["power_exact"]) <= rep["power_quantization_bound"] * (1 + 1e-12)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "radbkg", "estimate", "--json"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["total"]["M"] == pytest.approx(230e-6)
