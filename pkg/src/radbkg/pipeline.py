"""Two-stage Monte Carlo driver: stage-1 transport, re-aim, stage-2 deposition.

Histories are split into fixed-size chunks, each seeded from its own child of
one SeedSequence. Chunks run on a thread pool and are merged in chunk order,
so results depend on the seed and chunk size but not on the pool size.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import Config
from .deposition import DepositSpectrum, deposit, merge_spectra
from .phasespace import PhaseSpace, concatenate
from .reaiming import ReaimTarget, reaim
from .transport import SlabGeometry, simulate_cosmic_shielding, simulate_slab_emission

STAGES = ("gamma", "cosmic")


@dataclass
class RunResult:
    stage: str
    phase_space: PhaseSpace
    spectrum: DepositSpectrum
    chunks: list[DepositSpectrum] = field(default_factory=list)  # independent per-chunk spectra


def chunk_sizes(n: int, chunk: int) -> list[int]:
    if n <= 0:
        raise ValueError("number of histories must be positive")
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def stage_geometry(cfg: Config, stage: str) -> SlabGeometry:
    env = cfg.environment
    if stage == "gamma":
        return SlabGeometry.gamma_floor(cfg.floor_cm, env.aluminum_cm)
    if stage == "cosmic":
        return SlabGeometry.cosmic_ceiling(env.ceiling_cm, env.aluminum_cm)
    raise ValueError(f"stage must be one of {STAGES}")


def run_stage1(cfg: Config, stage: str, n: int, rng: np.random.Generator) -> PhaseSpace:
    geom = stage_geometry(cfg, stage)
    mc = cfg.mc
    cut = dict(photon_cutoff_kev=mc.photon_cutoff_kev, charged_cutoff_kev=mc.charged_cutoff_kev)
    if stage == "gamma":
        return simulate_slab_emission(cfg.environment.activities, geom, n, rng,
                                      generation_area_cm2=mc.generation_area_cm2, **cut)
    return simulate_cosmic_shielding(cfg.cosmic_models, cfg.environment, geom, n, rng,
                                     generation_area_cm2=mc.generation_area_cm2, **cut)


def run_chunk(cfg: Config, stage: str, n: int, seed) -> RunResult:
    """One independent chunk: n stage-1 histories through to a spectrum."""
    rng = np.random.default_rng(seed)
    ps = run_stage1(cfg, stage, n, rng)
    mc = cfg.mc
    target = ReaimTarget.around(cfg.substrate.half_extents_cm, mc.generation_area_cm2, mc.sphere_margin)
    # each copy is an independent re-aim of the same histories; merging with
    # live times added keeps the rate estimate unbiased
    specs = [deposit(reaim(ps, target, rng), cfg.substrate, rng, straggling=mc.straggling,
                     keep_events=mc.keep_events, photon_cutoff_kev=mc.photon_cutoff_kev,
                     charged_cutoff_kev=mc.charged_cutoff_kev)
             for _ in range(mc.reaim_copies)]
    return RunResult(stage, ps, merge_spectra(specs))


def simulate(cfg: Config, stage: str, n: int | None = None, seed: int = 0, threads: int = 1) -> RunResult:
    """Run ``n`` stage-1 histories (default from config) and merge the chunks in order."""
    if stage not in STAGES:
        raise ValueError(f"stage must be one of {STAGES}")
    n = cfg.mc.histories if n is None else n
    sizes = chunk_sizes(n, cfg.mc.chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    if threads <= 1 or len(sizes) == 1:
        parts = [run_chunk(cfg, stage, k, s) for k, s in zip(sizes, seeds)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: run_chunk(cfg, stage, *a), zip(sizes, seeds)))
    ps = concatenate([p.phase_space for p in parts])
    ps.meta["n_histories"] = n
    spec = merge_spectra([p.spectrum for p in parts])
    return RunResult(stage, ps, spec, [p.spectrum for p in parts])
