"""Cosmic-ray energy deposits in a wafer under a concrete ceiling.

Transport cosmic primaries through the ceiling, re-aim the survivors at a
500 um silicon wafer, and histogram the energy they leave behind. Straight
minimum-ionizing muons crossing the wafer produce the Landau peak near 160 keV.
Takes a few seconds with four threads.
"""

from dataclasses import replace

from radbkg.analysis import batch_uncertainty, spectrum_to_rates
from radbkg.config import load_config
from radbkg.pipeline import simulate

cfg = load_config(None)
cfg = replace(cfg, mc=replace(cfg.mc, chunk=50_000))
res = simulate(cfg, "cosmic", 400_000, seed=7, threads=4)
spec = res.spectrum

r = spectrum_to_rates(spec)
rate, err = batch_uncertainty(res.chunks)
print(f"live time {spec.live_time_s:.1f} s, {spec.total:.0f} weighted events")
print(f"R = {rate * 1e3:.2f} +/- {err * 1e3:.2f} mHz   P = {r.P:.2f} keV/s   M = {r.M * 1e6:.0f} uHz")
print(f"most probable deposit: {spec.mode():.0f} keV\n")

dens = spec.density
peak = dens.max()
for lo, hi, d in zip(spec.edges[:-1], spec.edges[1:], dens):
    if 30.0 <= lo < 1000.0:
        print(f"{lo:7.1f}-{hi:7.1f} keV | {'#' * int(60 * d / peak)}")
