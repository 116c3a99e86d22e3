"""Grid archives of elites over the 2-D behaviour space, MAP-Elites style.

A :class:`MapArchive` is a ``bins x bins`` grid (15 x 15 by default, 225
cells) over two behavioural traits: maximum displacement from the lifetime
start point, and the red-token ratio. Each cell holds at most one
:class:`Elite`. The same structure serves every role in the algorithm:
a robot's LocalMap, the transient SelectMap, the persistent MemoryMap of
variant M2, and the post-hoc swarm-map.

Two distinct tie rules apply and are deliberately not unified:

* ``try_insert`` replaces an occupant of equal fitness only when the
  candidate's behaviour vector is strictly closer to the cell centre
  (measured in normalized trait space).
* ``merge_from`` (and the left fold ``merge_maps``) replaces only on
  strictly greater fitness, so on ties the destination keeps its occupant.

Archives are value objects: ``copy()`` is cheap (elites and genomes are
immutable) and a broadcast snapshot is never affected by the sender's
later updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, EmptyArchiveError
from .genome import Genome

DEFAULT_BINS = 15
# Default normalization bound for the displacement trait: the arena
# diameter, which displacement can never exceed.
DEFAULT_DISTANCE_BOUND = 956.0

CellCoord = tuple[int, int]


@dataclass(frozen=True)
class BehaviourDescriptor:
    """Functional-trait vector of one evaluated lifetime.

    max_displacement: largest Euclidean distance from the lifetime start
        point, in arena units (>= 0).
    red_ratio: red tokens / total tokens collected, in [0, 1]
        (0.5 by convention when nothing was collected).
    """

    max_displacement: float
    red_ratio: float

    def __post_init__(self):
        if not (self.max_displacement >= 0.0 and math.isfinite(self.max_displacement)):
            raise ValueError(f"max_displacement must be finite and >= 0, got {self.max_displacement}")
        if not (0.0 <= self.red_ratio <= 1.0):
            raise ValueError(f"red_ratio must be in [0, 1], got {self.red_ratio}")


@dataclass(frozen=True)
class Elite:
    """Best-known occupant of one archive cell.

    ``genome`` may be None for archives loaded from dumps written without
    genome serialization; such archives support every operation except
    drawing a genome for reproduction.
    """

    genome: Optional[Genome]
    fitness: float
    descriptor: BehaviourDescriptor

    def __post_init__(self):
        if not (self.fitness >= 0.0 and math.isfinite(self.fitness)):
            raise ValueError(f"fitness must be finite and >= 0, got {self.fitness}")
        object.__setattr__(self, "fitness", float(self.fitness))


def bin_descriptor(
    descriptor: BehaviourDescriptor,
    distance_bound: float = DEFAULT_DISTANCE_BOUND,
    bins: int = DEFAULT_BINS,
) -> CellCoord:
    """Discretize a descriptor into grid coordinates.

    The displacement trait is normalized by ``distance_bound`` and clamped
    to 1, so every finite non-negative descriptor maps to a valid cell.
    """
    if distance_bound <= 0:
        raise ValueError(f"distance_bound must be > 0, got {distance_bound}")
    t1 = min(descriptor.max_displacement / distance_bound, 1.0)
    i = min(int(bins * t1), bins - 1)
    j = min(int(bins * descriptor.red_ratio), bins - 1)
    return (i, j)


class MapArchive:
    """Fixed-grid elite archive with per-cell monotone fitness."""

    __slots__ = ("bins", "distance_bound", "_cells")

    def __init__(self, bins: int = DEFAULT_BINS, distance_bound: float = DEFAULT_DISTANCE_BOUND):
        if bins < 1:
            raise ConfigurationError(f"bins must be >= 1, got {bins}")
        if distance_bound <= 0:
            raise ConfigurationError(f"distance_bound must be > 0, got {distance_bound}")
        self.bins = bins
        self.distance_bound = float(distance_bound)
        self._cells: dict[CellCoord, Elite] = {}

    # -- inspection ---------------------------------------------------------

    @property
    def occupied_count(self) -> int:
        """Number of occupied cells, in [0, bins^2]."""
        return len(self._cells)

    @property
    def capacity(self) -> int:
        return self.bins * self.bins

    def cell(self, coord: CellCoord) -> Optional[Elite]:
        return self._cells.get(coord)

    def items(self) -> Iterator[tuple[CellCoord, Elite]]:
        """Occupied cells in ascending (i, j) order."""
        return iter(sorted(self._cells.items()))

    def elites(self) -> list[Elite]:
        return [e for _, e in self.items()]

    def __len__(self) -> int:
        return len(self._cells)

    def __eq__(self, other):
        if not isinstance(other, MapArchive):
            return NotImplemented
        return (
            self.bins == other.bins
            and self.distance_bound == other.distance_bound
            and self._cells == other._cells
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"MapArchive(bins={self.bins}, occupied={self.occupied_count}/{self.capacity})"

    def copy(self) -> "MapArchive":
        """Snapshot copy; elites are immutable so the cell table is enough."""
        out = MapArchive(self.bins, self.distance_bound)
        out._cells = dict(self._cells)
        return out

    # -- geometry helpers ---------------------------------------------------

    def coord_of(self, descriptor: BehaviourDescriptor) -> CellCoord:
        return bin_descriptor(descriptor, self.distance_bound, self.bins)

    def _centre_distance(self, descriptor: BehaviourDescriptor, coord: CellCoord) -> float:
        # Normalized trait space [0,1]^2; centre of cell (i,j) at ((i+.5)/bins, (j+.5)/bins).
        t1 = min(descriptor.max_displacement / self.distance_bound, 1.0)
        t2 = descriptor.red_ratio
        cx = (coord[0] + 0.5) / self.bins
        cy = (coord[1] + 0.5) / self.bins
        return math.hypot(t1 - cx, t2 - cy)

    # -- updates ------------------------------------------------------------

    def try_insert(self, elite: Elite) -> bool:
        """Offer an elite to the cell its descriptor bins to.

        The cell is replaced iff it is empty, the candidate's fitness is
        strictly greater, or the fitness is equal and the candidate's
        behaviour vector is strictly closer to the cell centre. Returns
        whether a replacement happened.
        """
        coord = self.coord_of(elite.descriptor)
        incumbent = self._cells.get(coord)
        if incumbent is None or elite.fitness > incumbent.fitness:
            self._cells[coord] = elite
            return True
        if elite.fitness == incumbent.fitness:
            if self._centre_distance(elite.descriptor, coord) < self._centre_distance(
                incumbent.descriptor, coord
            ):
                self._cells[coord] = elite
                return True
        return False

    def merge_from(self, src: "MapArchive") -> "MapArchive":
        """Cell-wise merge of ``src`` into this archive (returns self).

        A cell is overwritten only when the source fitness is strictly
        greater; ties keep the current occupant, and empty source cells
        never erase anything.
        """
        if src.bins != self.bins:
            raise ConfigurationError(
                f"cannot merge archives with different grids: {src.bins} vs {self.bins}"
            )
        cells = self._cells
        for coord, elite in src._cells.items():
            mine = cells.get(coord)
            if mine is None or elite.fitness > mine.fitness:
                cells[coord] = elite
        return self

    def select_random_elite(self, rng: np.random.Generator) -> Genome:
        """Genome drawn uniformly over occupied cells."""
        if not self._cells:
            raise EmptyArchiveError("cannot select from an empty archive")
        coords = sorted(self._cells)
        elite = self._cells[coords[int(rng.integers(len(coords)))]]
        if elite.genome is None:
            raise EmptyArchiveError("archive was loaded without genomes; nothing to select")
        return elite.genome

    # -- serialization ------------------------------------------------------

    def dump_lines(self, include_genomes: bool = False) -> list[str]:
        """One ``i,j,fitness,trait1,trait2[,genome_hex]`` line per occupied cell."""
        lines = []
        for (i, j), e in self.items():
            line = (
                f"{i},{j},{_fmt(e.fitness)},{_fmt(e.descriptor.max_displacement)},"
                f"{_fmt(e.descriptor.red_ratio)}"
            )
            if include_genomes:
                if e.genome is None:
                    raise ValueError(f"cell ({i},{j}) has no genome to serialize")
                line += f",{e.genome.to_hex()}"
            lines.append(line)
        return lines

    def dump_text(self, include_genomes: bool = False) -> str:
        return "".join(line + "\n" for line in self.dump_lines(include_genomes))

    @classmethod
    def from_text(
        cls,
        text: str,
        bins: int = DEFAULT_BINS,
        distance_bound: float = DEFAULT_DISTANCE_BOUND,
    ) -> "MapArchive":
        """Parse a dump back into an archive.

        The stored descriptor must bin to the stored cell; anything else
        means the dump and the grid parameters disagree.
        """
        out = cls(bins, distance_bound)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) not in (5, 6):
                raise ValueError(f"line {lineno}: expected 5 or 6 fields, got {len(parts)}")
            i, j = int(parts[0]), int(parts[1])
            fitness = float(parts[2])
            desc = BehaviourDescriptor(float(parts[3]), float(parts[4]))
            genome = Genome.from_hex(parts[5]) if len(parts) == 6 else None
            coord = out.coord_of(desc)
            if coord != (i, j):
                raise ValueError(
                    f"line {lineno}: descriptor bins to {coord}, file says ({i},{j})"
                )
            out._cells[coord] = Elite(genome=genome, fitness=fitness, descriptor=desc)
        return out


def _fmt(x: float) -> str:
    return repr(float(x))


def merge_maps(maps: Sequence[MapArchive]) -> MapArchive:
    """Left fold of ``merge_from`` over a non-empty sequence of archives.

    Per-cell fitness of the result equals the maximum over the inputs;
    on equal fitness the earliest archive in the sequence wins.
    """
    if len(maps) == 0:
        raise ValueError("merge_maps needs at least one archive")
    out = maps[0].copy()
    for m in maps[1:]:
        out.merge_from(m)
    return out
