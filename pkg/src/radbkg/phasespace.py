"""Particle records passed between the simulation stages, and their CSV file format.

A file starts with the header line

    # radbkg-phsp v1 effective_time_s=<float> generation_area_cm2=<float>

followed by rows ``species,energy_keV,x_cm,y_cm,z_cm,ux,uy,uz,weight[,history]``.
The optional trailing ``history`` column groups records that came out of the
same stage-1 history; without it every record is its own history.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .physics import Species

HEADER_TAG = "radbkg-phsp v1"


@dataclass(frozen=True)
class PhaseSpaceRecord:
    species: Species
    energy_kev: float
    position: tuple[float, float, float]
    direction: tuple[float, float, float]
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "species", Species(self.species))
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "direction", tuple(float(v) for v in self.direction))
        if not self.energy_kev > 0:
            raise ValueError(f"energy must be positive, got {self.energy_kev}")
        if abs(np.linalg.norm(self.direction) - 1.0) > 1e-9:
            raise ValueError("direction must be a unit vector")
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")


@dataclass
class PhaseSpace:
    """Columnar set of particle records plus the run-level bookkeeping.

    ``effective_time_s`` is the real exposure the set represents and
    ``generation_area_cm2`` the lateral area it was generated over.
    """

    species: np.ndarray
    energy: np.ndarray
    position: np.ndarray
    direction: np.ndarray
    weight: np.ndarray
    history: np.ndarray
    effective_time_s: float = 0.0
    generation_area_cm2: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.energy)
        self.species = np.asarray(self.species, dtype=np.int8).reshape(n)
        self.energy = np.asarray(self.energy, dtype=float).reshape(n)
        self.position = np.asarray(self.position, dtype=float).reshape(n, 3)
        self.direction = np.asarray(self.direction, dtype=float).reshape(n, 3)
        self.weight = np.asarray(self.weight, dtype=float).reshape(n)
        self.history = np.asarray(self.history, dtype=np.int64).reshape(n)

    def __len__(self):
        return self.energy.size

    @classmethod
    def empty(cls, effective_time_s=0.0, generation_area_cm2=0.0) -> "PhaseSpace":
        return cls(
            np.zeros(0), np.zeros(0), np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0), np.zeros(0),
            effective_time_s, generation_area_cm2,
        )

    @classmethod
    def from_records(cls, records, effective_time_s=0.0, generation_area_cm2=0.0, history=None):
        records = list(records)
        if not records:
            return cls.empty(effective_time_s, generation_area_cm2)
        return cls(
            species=[r.species for r in records],
            energy=[r.energy_kev for r in records],
            position=[r.position for r in records],
            direction=[r.direction for r in records],
            weight=[r.weight for r in records],
            history=np.arange(len(records)) if history is None else history,
            effective_time_s=effective_time_s,
            generation_area_cm2=generation_area_cm2,
        )

    def records(self) -> list[PhaseSpaceRecord]:
        return [
            PhaseSpaceRecord(Species(int(s)), float(e), tuple(p), tuple(d), float(w))
            for s, e, p, d, w in zip(self.species, self.energy, self.position, self.direction, self.weight)
        ]

    def select(self, mask) -> "PhaseSpace":
        return PhaseSpace(
            self.species[mask], self.energy[mask], self.position[mask], self.direction[mask],
            self.weight[mask], self.history[mask], self.effective_time_s, self.generation_area_cm2,
            dict(self.meta),
        )

    def copy(self) -> "PhaseSpace":
        return self.select(slice(None))

    @property
    def n_histories(self) -> int:
        return int(np.unique(self.history).size)


def concatenate(parts, *, add_times: bool = True) -> PhaseSpace:
    """Merge phase-space partitions of one run.

    History ids are offset so they stay unique; effective times add when the
    parts are partitions of the same exposure.
    """
    parts = list(parts)
    if not parts:
        return PhaseSpace.empty()
    areas = {p.generation_area_cm2 for p in parts}
    if len(areas) > 1:
        raise ValueError("cannot merge phase spaces generated over different areas")
    hist, offset = [], 0
    for p in parts:
        hist.append(p.history + offset)
        span = int(p.history.max()) + 1 if len(p) else 0
        offset += max(span, int(p.meta.get("n_histories", 0)))
    time = sum(p.effective_time_s for p in parts) if add_times else parts[0].effective_time_s
    return PhaseSpace(
        np.concatenate([p.species for p in parts]),
        np.concatenate([p.energy for p in parts]),
        np.concatenate([p.position for p in parts]),
        np.concatenate([p.direction for p in parts]),
        np.concatenate([p.weight for p in parts]),
        np.concatenate(hist),
        time,
        areas.pop(),
    )


def write_csv(ps: PhaseSpace, path) -> None:
    lines = [
        f"# {HEADER_TAG} effective_time_s={float(ps.effective_time_s)!r} "
        f"generation_area_cm2={float(ps.generation_area_cm2)!r}"
    ]
    names = [Species(int(s)).label for s in ps.species]
    # repr of Python floats round-trips exactly
    num = np.column_stack([ps.energy, ps.position, ps.direction, ps.weight]).tolist()
    for name, row, h in zip(names, num, ps.history.tolist()):
        lines.append(f"{name}," + ",".join(map(repr, row)) + f",{h}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> PhaseSpace:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# " + HEADER_TAG):
        raise ValueError(f"{path}: not a {HEADER_TAG} file")
    header = dict(tok.split("=", 1) for tok in text[0][2:].split() if "=" in tok)
    rows = [ln.split(",") for ln in text[1:] if ln.strip() and not ln.startswith("#")]
    if rows and len(rows[0]) not in (9, 10):
        raise ValueError(f"{path}: expected 9 or 10 columns, got {len(rows[0])}")
    n = len(rows)
    species = [Species.parse(r[0]) for r in rows]
    num = np.array([[float(x) for x in r[1:9]] for r in rows]).reshape(n, 8)
    history = [int(r[9]) for r in rows] if rows and len(rows[0]) == 10 else np.arange(n)
    return PhaseSpace(
        species, num[:, 0], num[:, 1:4], num[:, 4:7], num[:, 7], history,
        float(header["effective_time_s"]), float(header["generation_area_cm2"]),
    )
