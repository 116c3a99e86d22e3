"""Post-run evaluation: expressed diversity, precision, swarm-maps.

Three lenses over finished runs:

* expressed diversity: how many archive cells the behaviours expressed by
  the active robots of one generation would occupy;
* precision (opt-in reliability): for each occupied cell, achieved fitness
  divided by the best fitness any run ever achieved for that cell,
  averaged over occupied cells;
* swarm-map: the external merge of every robot's LocalMap, never available
  to the swarm itself during a run.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .archive import BehaviourDescriptor, Elite, MapArchive, merge_maps
from .errors import DataInconsistencyError, EmptyArchiveError


def expressed_diversity(
    expressed: Iterable[tuple[float, BehaviourDescriptor]],
    bins: int = 15,
    distance_bound: float = 956.0,
) -> int:
    """Number of distinct cells occupied by the given (fitness, descriptor)
    pairs; pairs landing in the same cell count once."""
    archive = MapArchive(bins, distance_bound)
    for fitness, descriptor in expressed:
        archive.try_insert(Elite(None, fitness, descriptor))
    return archive.occupied_count


def build_swarm_map(local_maps: Sequence[MapArchive]) -> MapArchive:
    """Merge all robots' LocalMaps into one swarm-map (per-cell max)."""
    return merge_maps(local_maps)


class ReferenceMap:
    """Per-cell best-known fitness across a collection of maps.

    The estimate of each cell's optimum is the best fitness observed for
    that cell in any contributing map; a reference built over a superset
    of maps dominates one built over a subset cell-wise.
    """

    def __init__(self, bins: int = 15):
        self.bins = bins
        self.values = np.full((bins, bins), np.nan)

    def update_from(self, archive: MapArchive) -> "ReferenceMap":
        if archive.bins != self.bins:
            raise DataInconsistencyError(
                f"reference grid is {self.bins} bins, archive has {archive.bins}")
        for (i, j), elite in archive.items():
            if math.isnan(self.values[i, j]) or elite.fitness > self.values[i, j]:
                self.values[i, j] = elite.fitness
        return self

    @classmethod
    def from_maps(cls, maps: Iterable[MapArchive], bins: int = 15) -> "ReferenceMap":
        ref = cls(bins)
        for m in maps:
            ref.update_from(m)
        return ref

    def dump_text(self) -> str:
        lines = []
        for i in range(self.bins):
            for j in range(self.bins):
                v = self.values[i, j]
                if not math.isnan(v):
                    lines.append(f"{i},{j},{float(v)!r}")
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_text(cls, text: str, bins: int = 15) -> "ReferenceMap":
        ref = cls(bins)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected i,j,fitness")
            ref.values[int(parts[0]), int(parts[1])] = float(parts[2])
        return ref


def precision(archive: MapArchive, ref: ReferenceMap) -> float:
    """Mean over occupied cells of fitness / best-known fitness.

    In (0, 1] whenever the reference was built over a superset of maps
    that includes this archive. A cell where both the archive and the
    reference sit at fitness 0 counts as 1.0 (the best known value was
    achieved); a positive fitness above the reference, or a cell the
    reference never saw, means the reference was not built over a
    superset and is reported as an inconsistency.
    """
    if archive.occupied_count == 0:
        raise EmptyArchiveError("precision is undefined for an empty archive")
    if archive.bins != ref.bins:
        raise DataInconsistencyError(
            f"grid mismatch: archive {archive.bins} bins vs reference {ref.bins}")
    total = 0.0
    for (i, j), elite in archive.items():
        best = ref.values[i, j]
        if math.isnan(best):
            raise DataInconsistencyError(
                f"cell ({i},{j}) is occupied but absent from the reference")
        if best == 0.0:
            if elite.fitness > 0.0:
                raise DataInconsistencyError(
                    f"cell ({i},{j}): fitness {elite.fitness} exceeds reference 0")
            total += 1.0
        else:
            total += elite.fitness / float(best)
    return total / archive.occupied_count


def median_local_precision(local_maps: Sequence[MapArchive], ref: ReferenceMap) -> float:
    """Per-run summary for archive variants: median over robots of each
    LocalMap's precision. Robots whose map is still empty are skipped
    (they have no opt-in cells to score). An even count takes the mean of
    the two central values (numpy convention)."""
    values = [precision(m, ref) for m in local_maps if m.occupied_count > 0]
    if not values:
        raise EmptyArchiveError("no robot has an occupied LocalMap")
    return float(np.median(values))


def swarm_precision_summary(
    runs: Sequence[Sequence[MapArchive]], ref: ReferenceMap
) -> list[float]:
    """Median map precision of each run's collection of maps.

    For archive variants pass the 200 LocalMaps of each run; for the
    genome-broadcast baseline pass a single-element collection holding the
    run's expressed-behaviour map, which makes the median its precision.
    """
    return [median_local_precision(maps, ref) for maps in runs]


def write_pgm(archive: MapArchive, path: Path) -> None:
    """15x15 plain portable graymap of an archive, fitness scaled linearly
    to 0..255 over the map's own maximum; row r is displacement bin r."""
    bins = archive.bins
    grid = np.zeros((bins, bins))
    for (i, j), elite in archive.items():
        grid[i, j] = elite.fitness
    top = grid.max()
    scaled = np.zeros((bins, bins), dtype=int)
    if top > 0:
        scaled = np.rint(grid / top * 255.0).astype(int)
    lines = ["P2", f"{bins} {bins}", "255"]
    for i in range(bins):
        lines.append(" ".join(str(int(v)) for v in scaled[i]))
    Path(path).write_text("".join(line + "\n" for line in lines))
