"""Command-line front end: ``radbkg estimate | simulate | sweep``.

Exit codes: 0 success, 2 configuration error, 3 runtime or physics error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import fit_exponential, fit_linear, fit_power_law, power_quantization_bound, spectrum_to_rates
from .config import Config, ConfigError, dump_config, load_config, parse_quantity
from .deposition import SubstrateSpec, write_spectrum
from .materials import known_materials, load_material
from .phasespace import write_csv
from .rate_model import QUANTITIES, compute_rates, rate_breakdown

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
SWEEP_PARAMETERS = ("thickness", "elevation", "ceiling", "material", "size")
SWEEP_UNITS = {"thickness": "um", "elevation": "m", "ceiling": "cm", "size": "mm"}


def _emit(args, payload: dict, text: str, out) -> None:
    out.write(json.dumps(payload, indent=2) + "\n" if args.json else text)


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def estimate_report(cfg: Config) -> dict:
    parts = rate_breakdown(cfg.substrate, cfg.environment, cfg.params, cfg.scale)
    total = compute_rates(cfg.substrate, cfg.environment, cfg.params, cfg.scale)
    s = cfg.substrate
    return {
        "substrate": {"material": s.material.name, "thickness_um": s.thickness_um, "width_mm": s.width_mm,
                      "length_mm": s.length_mm, "tau": s.tau, "area_mm2": s.area_mm2},
        "total": total.as_dict(),
        "sources": [
            {"source": b.source, "strength": b.strength, **b.rates.as_dict(),
             "kappa": {q: dict(zip(("c", "sh", "rho"), b.kappas[q])) for q in QUANTITIES}}
            for b in parts
        ],
    }


def _estimate_text(rep: dict) -> str:
    s = rep["substrate"]
    lines = [f"substrate: {s['material']} {s['thickness_um']:g} um, {s['width_mm']:g} x {s['length_mm']:g} mm"
             f"  (tau = {s['tau']:.4g}, A = {s['area_mm2']:g} mm^2)", ""]
    lines.append(f"{'source':8} {'a':>8} {'R [1/s]':>11} {'P [keV/s]':>11} {'M [1/s]':>11}"
                 f"   kappa R (c, sh, rho)   kappa P (c, sh, rho)   kappa M (c, sh, rho)")
    for b in rep["sources"]:
        ks = "   ".join("({:.3g}, {:.3g}, {:.3g})".format(*b["kappa"][q].values()).ljust(20) for q in QUANTITIES)
        lines.append(f"{b['source']:8} {b['strength']:8.4g} {b['R']:11.4e} {b['P']:11.4g} {b['M']:11.4e}   {ks}")
    t = rep["total"]
    lines += ["", f"R = {t['R']:.6g} 1/s", f"P = {t['P']:.6g} keV/s", f"M = {t['M']:.6g} 1/s"]
    if t["M"] > 0:
        lines.append(f"one event above 1 MeV every {1.0 / t['M'] / 60.0:.4g} min")
    return "\n".join(lines) + "\n"


def cmd_estimate(cfg: Config, args, out) -> int:
    rep = estimate_report(cfg)
    _emit(args, rep, _estimate_text(rep), out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: Config, args, out) -> int:
    from .pipeline import simulate

    if args.keep_events:
        cfg = replace(cfg, mc=replace(cfg.mc, keep_events=True))
    n = args.histories if args.histories is not None else cfg.mc.histories
    res = simulate(cfg, args.stage, n, seed=args.seed, threads=args.threads)
    directory = Path(args.output or cfg.output_directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = directory / f"{cfg.output_prefix}_{args.stage}"
    phsp, spec_path = Path(f"{stem}_phsp.csv"), Path(f"{stem}_spectrum.csv")
    write_csv(res.phase_space, phsp)
    write_spectrum(res.spectrum, spec_path)
    rates = spectrum_to_rates(res.spectrum)
    payload = {"stage": args.stage, "histories": n, "seed": args.seed, "live_time_s": res.spectrum.live_time_s,
               "rates": rates.as_dict(), "power_quantization_bound": power_quantization_bound(res.spectrum),
               "mode_keV": res.spectrum.mode() if res.spectrum.counts.any() else None,
               "phase_space_file": str(phsp), "spectrum_file": str(spec_path)}
    if res.spectrum.events is not None:
        e, w = res.spectrum.events
        payload["power_exact"] = float(np.dot(e, w) / res.spectrum.live_time_s)
    text = (f"{args.stage}: {n} histories, seed {args.seed}, live time {res.spectrum.live_time_s:.6g} s\n"
            f"R = {rates.R:.6g} 1/s\nP = {rates.P:.6g} keV/s "
            f"(bin-centre bound {payload['power_quantization_bound']:.3g})\nM = {rates.M:.6g} 1/s\n"
            f"wrote {phsp} and {spec_path}\n")
    _emit(args, payload, text, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _sweep_values(param: str, raw: str, unit: str | None) -> list:
    items = [v.strip() for v in raw.split(",") if v.strip()]
    if not items:
        raise ConfigError("no values given", "--values")
    if param == "material":
        for m in items:
            if m not in known_materials():
                raise ConfigError(f"unknown material {m!r}; known: {', '.join(known_materials())}", "--values")
        return items
    base = SWEEP_UNITS[param]
    if unit is None:
        raise ConfigError(f"a unit is required for {param} (e.g. --unit {base})", "--unit")
    if param == "size":
        out = []
        for it in items:
            try:
                w, l = it.lower().split("x")
            except ValueError:
                raise ConfigError(f"size values look like 10x1, got {it!r}", "--values") from None
            out.append((parse_quantity(f"{w} {unit}", base, "--values"), parse_quantity(f"{l} {unit}", base, "--values")))
        return out
    return [parse_quantity(f"{it} {unit}", base, "--values") for it in items]


def _apply(cfg: Config, param: str, value) -> Config:
    s, e = cfg.substrate, cfg.environment
    if param == "thickness":
        return replace(cfg, substrate=SubstrateSpec(s.material, value, s.width_mm, s.length_mm))
    if param == "material":
        return replace(cfg, substrate=SubstrateSpec(load_material(value), s.thickness_um, s.width_mm, s.length_mm))
    if param == "size":
        return replace(cfg, substrate=SubstrateSpec(s.material, s.thickness_um, *value))
    if param == "elevation":
        return replace(cfg, environment=replace(e, elevation_m=value))
    return replace(cfg, environment=replace(e, ceiling_cm=value))


def sweep_table(cfg: Config, param: str, values, *, mc_stage=None, histories=None, seed=0, threads=1):
    """One row per value: the analytic triple, plus MC rates when ``mc_stage`` is set."""
    rows = []
    for i, v in enumerate(values):
        c = _apply(cfg, param, v)
        parts = rate_breakdown(c.substrate, c.environment, c.params, c.scale)
        r = compute_rates(c.substrate, c.environment, c.params, c.scale)
        row = {"value": "x".join(f"{x:g}" for x in v) if isinstance(v, tuple) else v, "R": r.R, "P": r.P, "M": r.M,
               "P_gamma": sum(b.rates.P for b in parts if b.source != "CR"),
               "R_CR": next(b.rates.R for b in parts if b.source == "CR")}
        if mc_stage:
            from .pipeline import simulate

            res = simulate(c, mc_stage, histories, seed=seed + i, threads=threads)
            mr = spectrum_to_rates(res.spectrum)
            row.update({"mc_R": mr.R, "mc_P": mr.P, "mc_M": mr.M})
        rows.append(row)
    return rows


def sweep_fits(param: str, rows, values) -> list[dict]:
    fits = []
    prefixes = [""] + (["mc_"] if rows and "mc_R" in rows[0] else [])
    for pre in prefixes:
        if param == "thickness":
            x = np.asarray(values, dtype=float)
            for q in ("P", "P_gamma") if not pre else ("P",):
                pts = [(xi, r[pre + q]) for xi, r in zip(x, rows) if r[pre + q] > 0]
                if len(pts) >= 3:
                    fits.append({"column": pre + q, **_fit_dict(fit_power_law(pts))})
            pts = [(xi, r[pre + "R"]) for xi, r in zip(x, rows)]
            if len(pts) >= 3:
                fits.append({"column": pre + "R", **_fit_dict(fit_linear(pts))})
        elif param == "elevation":
            x = np.asarray(values, dtype=float)
            for q in ("R_CR",) if not pre else ("R",):
                pts = [(xi, r[pre + q]) for xi, r in zip(x, rows) if r[pre + q] > 0]
                if len(pts) >= 3:
                    fits.append({"column": pre + q, **_fit_dict(fit_exponential(pts))})
    return fits


def _fit_dict(f) -> dict:
    return {"model": f.model, "parameters": f.parameters, "residual": f.residual, "n_points": f.n_points,
            "diverged": f.diverged}


def cmd_sweep(cfg: Config, args, out) -> int:
    params = [p for group in args.param for p in group.split(",") if p.strip()]
    if len(params) != 1:
        raise ConfigError("sweeps vary one parameter at a time, all others held at their configured values; "
                          f"got {params}", "--param")
    param = params[0].strip()
    if param not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter; choose from {', '.join(SWEEP_PARAMETERS)}", "--param")
    values = _sweep_values(param, args.values, args.unit)
    rows = sweep_table(cfg, param, values, mc_stage=args.mc, histories=args.histories, seed=args.seed,
                       threads=args.threads)
    fits = sweep_fits(param, rows, values)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    table = buf.getvalue()
    if args.output:
        Path(args.output).write_text(table)
    payload = {"parameter": param, "unit": SWEEP_UNITS.get(param), "rows": rows, "fits": fits}
    text = table + "".join(f"# fit {f['column']}: {json.dumps(f)}\n" for f in fits)
    _emit(args, payload, text, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _common_flags(suppress: bool) -> argparse.ArgumentParser:
    """Global flags, accepted before or after the subcommand.

    The subcommand copy suppresses defaults so it cannot overwrite values
    given before the subcommand name.
    """
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=d(None), help="INI file overriding the shipped defaults")
    common.add_argument("--seed", type=int, default=d(0), help="base seed for random streams (default 0)")
    common.add_argument("--threads", type=int, default=d(1), help="worker threads for Monte Carlo chunks")
    common.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")
    common.add_argument("--print-params", action="store_true", default=d(False),
                        help="print the rate-model parameters and exit")
    common.add_argument("--dump-config", action="store_true", default=d(False),
                        help="print the effective configuration and exit")
    return common


def build_parser() -> argparse.ArgumentParser:
    top, common = _common_flags(False), _common_flags(True)

    p = argparse.ArgumentParser(prog="radbkg", parents=[top],
                                description="Radiation event rates in cryogenic substrates.")
    p.add_argument("--version", action="version", version=f"radbkg {__version__}")
    sub = p.add_subparsers(dest="command")

    sub.add_parser("estimate", parents=[common], help="closed-form rates with per-source breakdown")

    sim = sub.add_parser("simulate", parents=[common], help="two-stage Monte Carlo")
    sim.add_argument("--stage", choices=("gamma", "cosmic"), required=True)
    sim.add_argument("-n", "--histories", type=int, help="stage-1 histories (default from config)")
    sim.add_argument("--output", help="output directory (default from config)")
    sim.add_argument("--keep-events", action="store_true", help="retain per-event deposits for exact P")

    sw = sub.add_parser("sweep", parents=[common], help="one-at-a-time parameter sweep")
    sw.add_argument("--param", action="append", required=True, help=f"one of {', '.join(SWEEP_PARAMETERS)}")
    sw.add_argument("--values", required=True, help="comma-separated values; sizes as WxL")
    sw.add_argument("--unit", help="unit of the values, e.g. um, m, cm, mm")
    sw.add_argument("--mc", choices=("gamma", "cosmic"), help="also run the Monte Carlo for this stage")
    sw.add_argument("-n", "--histories", type=int, help="histories per point with --mc")
    sw.add_argument("--output", help="also write the CSV table here")
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.threads < 1:
            raise ConfigError("must be >= 1", "--threads")
        if args.dump_config:
            out.write(dump_config(cfg))
            return EXIT_OK
        if args.print_params:
            out.write(json.dumps(cfg.params.as_dict(), indent=2) + "\n")
            return EXIT_OK
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_CONFIG
        return {"estimate": cmd_estimate, "simulate": cmd_simulate, "sweep": cmd_sweep}[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"radbkg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"radbkg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError) as exc:
        print(f"radbkg: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
