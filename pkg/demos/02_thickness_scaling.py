"""How the gamma-ray deposited power grows with wafer thickness.

Sweep the thickness of a silicon wafer, split the deposited power into its
terrestrial-gamma and cosmic-ray parts, and fit a power law to each. The gamma
part follows tau^1.12 while cosmic rays deposit power in proportion to the
path length.
"""

from dataclasses import replace

import numpy as np

from radbkg.analysis import fit_power_law
from radbkg.deposition import SubstrateSpec
from radbkg.rate_model import rate_breakdown
from radbkg.sources import EnvironmentSpec

env = EnvironmentSpec()
thicknesses = np.geomspace(10.0, 2000.0, 9)
gamma, cosmic = [], []
print(" t [um]   P_gamma [keV/s]   P_CR [keV/s]   M [uHz]")
for t in thicknesses:
    parts = rate_breakdown(replace(SubstrateSpec.nominal(), thickness_um=t), env)
    pg = sum(b.rates.P for b in parts if b.source != "CR")
    pc = next(b.rates.P for b in parts if b.source == "CR")
    m = sum(b.rates.M for b in parts)
    gamma.append(pg)
    cosmic.append(pc)
    print(f"{t:7.1f}   {pg:15.3f}   {pc:12.3f}   {m * 1e6:7.2f}")

for label, ys in (("gamma", gamma), ("cosmic", cosmic)):
    fit = fit_power_law(zip(thicknesses, ys))
    print(f"{label:>6s}: P ~ t^{fit.parameters['exponent']:.3f}")
