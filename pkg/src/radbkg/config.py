"""Typed INI configuration with mandatory units.

Sections: substrate, environment, sources, cosmic, cosmic.<species>,
params.<source>, mc, output. A user file overrides any subset of the shipped
defaults; unknown sections or keys are errors naming the offender.
"""

from __future__ import annotations

import configparser
import functools
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .deposition import SubstrateSpec
from .materials import known_materials, load_material
from .physics import Species
from .rate_model import SOURCE_IDS, ScaleHeightModel, SourceParams
from .sources import CHAIN_IDS, CosmicSpeciesModel, EnvironmentSpec


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is 'section.key' where known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@functools.lru_cache(maxsize=1)
def _ureg():
    import pint

    return pint.UnitRegistry()


def parse_quantity(text: str, unit: str, key: str) -> float:
    """Magnitude of ``text`` in ``unit``; a bare number is rejected unless unit is ''."""
    text = text.strip()
    if unit == "":
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"expected a plain number, got {text!r}", key) from None
    try:
        float(text)
    except ValueError:
        pass
    else:
        raise ConfigError(f"missing unit (expected something convertible to {unit})", key)
    import pint

    try:
        return float(_ureg().Quantity(text).to(unit).magnitude)
    except (pint.errors.PintError, ValueError, AttributeError, TypeError) as exc:
        raise ConfigError(f"cannot read {text!r} as {unit}: {exc}", key) from None


def _bool(text: str, key: str) -> bool:
    v = text.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected true/false, got {text!r}", key)


def _int(text: str, key: str) -> int:
    try:
        v = int(float(text))
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", key) from None
    if v != float(text):
        raise ConfigError(f"expected an integer, got {text!r}", key)
    return v


# key -> (unit, default-free) per fixed section; '' means dimensionless, None means text
_SCHEMA = {
    "substrate": {"material": None, "thickness": "um", "width": "mm", "length": "mm"},
    "environment": {"elevation": "m", "ceiling": "cm", "aluminum": "cm", "floor": "cm"},
    "sources": {c: "Bq/kg" for c in CHAIN_IDS},
    "cosmic": {"scale_mode": None, "scale_height": "m", "split_weight_muon": "",
               "split_weight_nuclear": "", "split_weight_em": ""},
    "mc": {"histories": "int", "chunk": "int", "generation_area": "cm^2", "sphere_margin": "",
           "photon_cutoff": "keV", "charged_cutoff": "keV", "straggling": "bool", "keep_events": "bool",
           "reaim_copies": "int"},
    "output": {"directory": None, "prefix": None},
}
_COSMIC_SCHEMA = {"enabled": "bool", "flux": "1/cm^2/s", "scale_height": "m", "spectrum": None, "index": "",
                  "cutoff": "MeV", "offset": "MeV", "breaks": "MeV-list", "indices": "list",
                  "e_min": "MeV", "e_max": "MeV", "zenith_exponent": ""}
_PARAM_SCHEMA = {"c": "1/s", "g": "1/s", "p": "keV/s", "beta": "", "m": "1/s", "alpha": "", "rho_ga": "g/cm^3"}


@dataclass
class MCSettings:
    histories: int = 1_000_000
    chunk: int = 100_000
    generation_area_cm2: float = 1.0e8
    sphere_margin: float = 1.2
    photon_cutoff_kev: float = 10.0
    charged_cutoff_kev: float = 20.0
    straggling: bool = True
    keep_events: bool = False
    reaim_copies: int = 1

    def __post_init__(self):
        if self.histories <= 0 or self.chunk <= 0:
            raise ConfigError("must be positive", "mc.histories/chunk")
        if self.reaim_copies < 1:
            raise ConfigError("must be >= 1", "mc.reaim_copies")
        if self.sphere_margin < 1.0:
            raise ConfigError("must be >= 1 so the sphere encloses the substrate", "mc.sphere_margin")


@dataclass
class Config:
    substrate: SubstrateSpec
    environment: EnvironmentSpec
    floor_cm: float
    params: SourceParams
    scale: ScaleHeightModel
    cosmic_models: list[CosmicSpeciesModel]
    mc: MCSettings = field(default_factory=MCSettings)
    output_directory: str = "."
    output_prefix: str = "radbkg"


def _read(parser: configparser.ConfigParser, path_or_text, is_text=False):
    try:
        if is_text:
            parser.read_string(path_or_text)
        else:
            with open(path_or_text) as fh:
                parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None


def _new_parser():
    p = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    p.optionxform = str
    return p


def _validate_keys(parser):
    for sec in parser.sections():
        if sec in _SCHEMA:
            allowed = _SCHEMA[sec]
        elif sec.startswith("cosmic."):
            try:
                Species.parse(sec.split(".", 1)[1])
            except (KeyError, ValueError):
                raise ConfigError("unknown cosmic species section", sec) from None
            allowed = _COSMIC_SCHEMA
        elif sec.startswith("params."):
            if sec.split(".", 1)[1] not in SOURCE_IDS:
                raise ConfigError(f"unknown source; known: {', '.join(SOURCE_IDS)}", sec)
            allowed = _PARAM_SCHEMA
        else:
            raise ConfigError("unknown section", sec)
        for key in parser[sec]:
            if key not in allowed:
                raise ConfigError(f"unknown key (allowed: {', '.join(allowed)})", f"{sec}.{key}")


def _value(parser, sec, key, kind):
    text = parser[sec][key]
    full = f"{sec}.{key}"
    if kind is None:
        return text.strip()
    if kind == "bool":
        return _bool(text, full)
    if kind == "int":
        return _int(text, full)
    if kind == "list":
        return tuple(parse_quantity(t, "", full) for t in text.split(",") if t.strip())
    if kind == "MeV-list":
        return tuple(parse_quantity(t, "MeV", full) for t in text.split(",") if t.strip())
    return parse_quantity(text, kind, full)


def _section(parser, sec, schema):
    return {k: _value(parser, sec, k, schema[k]) for k in parser[sec]} if parser.has_section(sec) else {}


def _cosmic_model(sec, values) -> CosmicSpeciesModel | None:
    values = dict(values)
    if not values.pop("enabled", True):
        return None
    names = {"flux": "integral_flux", "scale_height": "scale_height_m", "cutoff": "cutoff_mev",
             "offset": "offset_mev", "breaks": "breaks_mev", "e_min": "e_min_mev", "e_max": "e_max_mev"}
    kwargs = {names.get(k, k): v for k, v in values.items()}
    try:
        return CosmicSpeciesModel(Species.parse(sec.split(".", 1)[1]), **kwargs)
    except TypeError as exc:
        raise ConfigError(f"incomplete species model: {exc}", sec) from None
    except ValueError as exc:
        raise ConfigError(str(exc), sec) from None


def _build(parser) -> Config:
    _validate_keys(parser)
    sub = _section(parser, "substrate", _SCHEMA["substrate"])
    try:
        material = load_material(sub["material"])
    except KeyError:
        raise ConfigError(f"unknown material {sub['material']!r}; known: {', '.join(known_materials())}",
                          "substrate.material") from None
    try:
        substrate = SubstrateSpec(material, sub["thickness"], sub["width"], sub["length"])
    except ValueError as exc:
        raise ConfigError(str(exc), "substrate") from None

    env = _section(parser, "environment", _SCHEMA["environment"])
    acts = _section(parser, "sources", _SCHEMA["sources"])
    try:
        environment = EnvironmentSpec(env["elevation"], env["ceiling"], env["aluminum"], acts)
    except ValueError as exc:
        raise ConfigError(str(exc), "environment") from None
    if env["floor"] <= 0:
        raise ConfigError("must be positive", "environment.floor")

    cos = _section(parser, "cosmic", _SCHEMA["cosmic"])
    try:
        scale = ScaleHeightModel(cos["scale_mode"], cos["scale_height"], split_weights=(
            cos["split_weight_muon"], cos["split_weight_nuclear"], cos["split_weight_em"]))
    except ValueError as exc:
        raise ConfigError(str(exc), "cosmic") from None

    models = []
    for sec in parser.sections():
        if sec.startswith("cosmic."):
            m = _cosmic_model(sec, _section(parser, sec, _COSMIC_SCHEMA))
            if m is not None:
                models.append(m)

    params = SourceParams()
    for sec in parser.sections():
        if sec.startswith("params."):
            try:
                params = params.with_term(sec.split(".", 1)[1], **_section(parser, sec, _PARAM_SCHEMA))
            except ValueError as exc:
                raise ConfigError(str(exc), sec) from None

    mc = _section(parser, "mc", _SCHEMA["mc"])
    settings = MCSettings(
        mc["histories"], mc["chunk"], mc["generation_area"], mc["sphere_margin"],
        mc["photon_cutoff"], mc["charged_cutoff"], mc["straggling"], mc["keep_events"], mc["reaim_copies"],
    )
    out = _section(parser, "output", _SCHEMA["output"])
    return Config(substrate, environment, env["floor"], params, scale, models, settings,
                  out["directory"], out["prefix"])


def default_text() -> str:
    return (resources.files("radbkg") / "data" / "default.ini").read_text()


def parse_config(text: str | None = None) -> Config:
    """Defaults overlaid with the given INI text."""
    parser = _new_parser()
    _read(parser, default_text(), True)
    if text is not None:
        user = _new_parser()
        _read(user, text, True)
        _validate_keys(user)
        parser.read_dict({s: dict(user[s]) for s in user.sections()})
    return _build(parser)


def load_config(path: str | Path | None) -> Config:
    """Read a config file over the shipped defaults; None gives the defaults.

    Raises:
        ConfigError: unknown key, missing unit, bad value.
        OSError: the file cannot be read.
    """
    if path is None:
        return parse_config(None)
    return parse_config(Path(path).read_text())


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_config(cfg: Config) -> str:
    """The full effective configuration as INI text that re-parses to the same values."""
    s, e = cfg.substrate, cfg.environment
    lines = [
        "[substrate]", f"material = {s.material.name}", f"thickness = {_fmt(s.thickness_um)} um",
        f"width = {_fmt(s.width_mm)} mm", f"length = {_fmt(s.length_mm)} mm", "",
        "[environment]", f"elevation = {_fmt(e.elevation_m)} m", f"ceiling = {_fmt(e.ceiling_cm)} cm",
        f"aluminum = {_fmt(e.aluminum_cm)} cm", f"floor = {_fmt(cfg.floor_cm)} cm", "",
        "[sources]", *(f"{c} = {_fmt(e.activities[c])} Bq/kg" for c in CHAIN_IDS), "",
        "[cosmic]", f"scale_mode = {cfg.scale.mode}", f"scale_height = {_fmt(cfg.scale.lambda_m)} m",
        f"split_weight_muon = {_fmt(cfg.scale.split_weights[0])}",
        f"split_weight_nuclear = {_fmt(cfg.scale.split_weights[1])}",
        f"split_weight_em = {_fmt(cfg.scale.split_weights[2])}", "",
    ]
    enabled = {m.species for m in cfg.cosmic_models}
    for m in cfg.cosmic_models:
        lines += [f"[cosmic.{m.species.label}]", "enabled = true", f"flux = {_fmt(m.integral_flux)} 1/cm^2/s",
                  f"scale_height = {_fmt(m.scale_height_m)} m", f"spectrum = {m.spectrum}",
                  f"index = {_fmt(m.index)}", f"cutoff = {_fmt(m.cutoff_mev)} MeV",
                  f"offset = {_fmt(m.offset_mev)} MeV"]
        if m.breaks_mev:
            lines.append("breaks = " + ", ".join(f"{_fmt(b)} MeV" for b in m.breaks_mev))
        if m.indices:
            lines.append("indices = " + ", ".join(_fmt(i) for i in m.indices))
        lines += [f"e_min = {_fmt(m.e_min_mev)} MeV", f"e_max = {_fmt(m.e_max_mev)} MeV",
                  f"zenith_exponent = {_fmt(m.zenith_exponent)}", ""]
    for sp in Species:
        if sp not in enabled:
            lines += [f"[cosmic.{sp.label}]", "enabled = false", ""]
    units = {"c": "1/s", "g": "1/s", "p": "keV/s", "m": "1/s", "rho_ga": "g/cm^3"}
    for src, term in cfg.params.as_dict().items():
        lines.append(f"[params.{src}]")
        for k, v in term.items():
            if v is not None:
                lines.append(f"{k} = {_fmt(v)}" + (f" {units[k]}" if k in units else ""))
        lines.append("")
    mc = cfg.mc
    lines += [
        "[mc]", f"histories = {mc.histories}", f"chunk = {mc.chunk}",
        f"generation_area = {_fmt(mc.generation_area_cm2)} cm^2", f"sphere_margin = {_fmt(mc.sphere_margin)}",
        f"photon_cutoff = {_fmt(mc.photon_cutoff_kev)} keV", f"charged_cutoff = {_fmt(mc.charged_cutoff_kev)} keV",
        f"straggling = {str(mc.straggling).lower()}", f"keep_events = {str(mc.keep_events).lower()}",
        f"reaim_copies = {mc.reaim_copies}", "",
        "[output]", f"directory = {cfg.output_directory}", f"prefix = {cfg.output_prefix}", "",
    ]
    return "\n".join(lines)


def with_overrides(cfg: Config, **changes) -> Config:
    return replace(cfg, **changes)
