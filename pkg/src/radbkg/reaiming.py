"""Re-aiming: move stage-1 output onto a small sphere around the substrate.

Every history is translated rigidly so that its leading (most energetic)
record passes through a uniformly drawn point of the sphere's cross-section
normal to that record's direction. Energies and directions are untouched.

The stage-1 output is a sample of particles crossing a horizontal plane of
area A_gen. Forcing each one through a disc of area pi r^2 stands for a
longer exposure, so the effective time is multiplied by A_gen / (pi r^2).
A particle crossing the plane at polar cosine u_z has a chance proportional
to 1/|u_z| (the projected disc area on the plane) of reaching the sphere in
reality, which the history weight carries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phasespace import PhaseSpace

DEFAULT_MARGIN = 1.2


@dataclass(frozen=True)
class ReaimTarget:
    center: tuple[float, float, float]
    radius: float
    generation_area_cm2: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")
        if not self.generation_area_cm2 > self.cross_section:
            raise ValueError(
                f"generation area {self.generation_area_cm2:g} cm^2 must exceed the sphere "
                f"cross-section {self.cross_section:g} cm^2"
            )

    @property
    def cross_section(self) -> float:
        return math.pi * self.radius**2

    @property
    def ratio(self) -> float:
        """Unshifted over shifted area; multiplies the effective time."""
        return self.generation_area_cm2 / self.cross_section

    @classmethod
    def around(cls, half_extents_cm, generation_area_cm2, margin=DEFAULT_MARGIN, center=(0.0, 0.0, 0.0)):
        """Sphere of radius margin x half-diagonal of a box."""
        radius = margin * float(np.linalg.norm(half_extents_cm))
        return cls(center, radius, generation_area_cm2)


def orthonormal_basis(u: np.ndarray):
    """Two unit vectors completing each row of u to a right-handed frame."""
    a = np.where(np.abs(u[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(a, u)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(u, e1)
    return e1, e2


def leading_records(history: np.ndarray, energy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(unique history ids, index of the most energetic record of each)."""
    order = np.lexsort((-energy, history))
    h_sorted = history[order]
    first = np.concatenate(([True], h_sorted[1:] != h_sorted[:-1]))
    return h_sorted[first], order[first]


def reaim(ps: PhaseSpace, target: ReaimTarget, rng: np.random.Generator) -> PhaseSpace:
    """Translate each history onto the target sphere and rescale the effective time."""
    if ps.generation_area_cm2 and not math.isclose(ps.generation_area_cm2, target.generation_area_cm2):
        raise ValueError("target generation area differs from the phase space's")
    norms = np.linalg.norm(ps.direction, axis=1)
    if len(ps) and np.max(np.abs(norms - 1.0)) > 1e-9:
        raise ValueError("record directions must be unit vectors")
    out = ps.copy()
    out.effective_time_s = ps.effective_time_s * target.ratio
    out.meta.update(ps.meta)
    out.meta["reaim_radius"] = target.radius
    out.meta["reaim_center"] = target.center
    if not len(ps):
        return out

    ids, lead = leading_records(ps.history, ps.energy)
    u = ps.direction[lead]
    e1, e2 = orthonormal_basis(u)
    rho = target.radius * np.sqrt(rng.random(ids.size))
    psi = 2 * np.pi * rng.random(ids.size)
    c = np.asarray(target.center)
    through = c + rho[:, None] * (np.cos(psi)[:, None] * e1 + np.sin(psi)[:, None] * e2)
    start = through - u * target.radius
    shift = start - ps.position[lead]

    slot = np.searchsorted(ids, ps.history)
    out.position = ps.position + shift[slot]
    with np.errstate(divide="ignore"):
        w = 1.0 / np.abs(u[:, 2])
    out.weight = ps.weight * w[slot]
    return out
