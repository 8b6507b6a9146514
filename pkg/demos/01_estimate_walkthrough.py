"""Closed-form background estimate for a few candidate substrates.

Start from the nominal 10 x 10 x 0.5 mm silicon wafer at sea level, then vary
one thing at a time: material, thickness, footprint, and laboratory elevation.
Every number here comes from the closed-form model, so the script runs in well
under a second.
"""

from dataclasses import replace

from radbkg.deposition import SubstrateSpec
from radbkg.rate_model import compute_rates, rate_breakdown, thin_limit
from radbkg.sources import EnvironmentSpec


def show(label, substrate, env):
    r = compute_rates(substrate, env)
    print(f"{label:<34s} R = {r.R * 1e3:7.2f} mHz   P = {r.P:7.2f} keV/s   M = {r.M * 1e6:7.1f} uHz")


env = EnvironmentSpec()
si = SubstrateSpec.nominal()

print("Per-source contributions for the nominal wafer:")
for b in rate_breakdown(si, env):
    print(f"  {b.source:<7s} R = {b.rates.R * 1e3:6.2f} mHz   P = {b.rates.P:6.2f} keV/s   M = {b.rates.M * 1e6:6.1f} uHz")
total = compute_rates(si, env)
print(f"  one event above 1 MeV every {1 / total.M / 60:.1f} min\n")

show("nominal Si", si, env)
for name in ("SiC", "Al2O3", "GaAs"):
    show(f"{name}, same geometry", SubstrateSpec.nominal(name), env)
show("Si, 100 um thick", replace(si, thickness_um=100.0), env)
show("Si, 10 x 1 mm strip", replace(si, length_mm=1.0), env)
show("Si, lab at 2 km", si, replace(env, elevation_m=2000.0))
show("Si, 40 cm concrete ceiling", si, replace(env, ceiling_cm=40.0))

thin = thin_limit(env)
print(f"\nThin-wafer limit of R: {thin.R * 1e3:.2f} mHz (P and M vanish)")
