"""Generational protocol and selection policies.

Five treatments share one lifecycle: robots run a fixed lifetime, then a
synchronous end-of-lifetime event updates archives and selects the next
genome. The EDQD variants differ in how a robot condenses the archives it
received into the transient SelectMap it draws from, and in what it keeps:

* R:  pick one received archive at random, draw from it.
* M1: merge every received archive, draw from the merged map.
* M2: merge received archives with a persistent MemoryMap, draw from the
      result, and store the result back as the new MemoryMap.
* M3: merge received archives into the robot's own LocalMap (so its own
      broadcasts now carry foreign elites) and draw from the union.

The mEDEA-fps baseline broadcasts raw genomes instead of archives and
selects fitness-proportionately from the genomes collected this lifetime.

Robots that collected nothing they can select from go dormant for one
lifetime: they neither move nor broadcast, but keep listening, which is
what lets them reactivate. One bootstrap rule handles the very first
generation, where broadcast archives are still empty because archives
only gain their first elite at the end of a lifetime: a robot that did
receive archives but found no elite in them falls back to drawing from
its own just-updated LocalMap. From generation 1 onward every broadcast
archive contains at least the sender's own elite, so the fallback can
never fire again.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .archive import BehaviourDescriptor, Elite, MapArchive, bin_descriptor, merge_maps
from .config import RunConfig, software_versions
from .genome import Genome, mutate, random_genome
from .simworld import ArenaConfig, RobotState, World, lifetime_traits


class Variant(Enum):
    R = "R"
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    MEDEA_FPS = "medea-fps"

    @property
    def uses_maps(self) -> bool:
        return self is not Variant.MEDEA_FPS


def parse_variant(text: str) -> Variant:
    for v in Variant:
        if v.value.lower() == text.strip().lower():
            return v
    raise ValueError(f"unknown variant {text!r}; expected one of "
                     f"{', '.join(v.value for v in Variant)}")


@dataclass
class RobotRecord:
    robot_id: int
    active: bool
    fitness: Optional[int]
    descriptor: Optional[BehaviourDescriptor]
    cell: Optional[tuple[int, int]]
    local_map_occ: int


@dataclass
class GenerationReport:
    generation: int
    active_count: int  # robots that held a genome during this lifetime
    records: list[RobotRecord]

    def expressed(self) -> list[tuple[int, BehaviourDescriptor]]:
        """(fitness, descriptor) of every robot active this generation."""
        return [(r.fitness, r.descriptor) for r in self.records if r.active]


def fps_select(pairs: Sequence[tuple[Genome, int]], rng: np.random.Generator) -> Genome:
    """Fitness-proportionate draw; uniform when every fitness is zero."""
    if not pairs:
        raise ValueError("fps_select needs at least one candidate")
    total = float(sum(f for _, f in pairs))
    if total <= 0.0:
        return pairs[int(rng.integers(len(pairs)))][0]
    u = rng.random() * total
    acc = 0.0
    for genome, fitness in pairs:
        acc += fitness
        if u < acc:
            return genome
    return pairs[-1][0]


def build_select_map(
    variant: Variant,
    received: Sequence[MapArchive],
    local_map: MapArchive,
    memory_map: Optional[MapArchive],
    rng: np.random.Generator,
) -> tuple[Optional[MapArchive], Optional[MapArchive]]:
    """Condense this lifetime's received archives into a SelectMap.

    Returns (select_map, new_memory_map); the memory entry is only
    non-None for M2, where the merged result becomes the new MemoryMap.
    Merge order is received archives first (by sender order as given),
    then the memory/local archive, so on fitness ties fresher material
    wins cell occupancy.
    """
    if variant is Variant.R:
        if not received:
            return None, None
        return received[int(rng.integers(len(received)))], None
    if variant is Variant.M1:
        if not received:
            return None, None
        return merge_maps(received), None
    if variant is Variant.M2:
        pool = list(received)
        if memory_map is not None:
            pool.append(memory_map)
        if not pool:
            return None, None
        merged = merge_maps(pool)
        return merged, merged
    if variant is Variant.M3:
        pool = list(received) + [local_map]
        return merge_maps(pool), None
    raise ValueError(f"not an archive-based variant: {variant}")


def end_of_lifetime(
    robot: RobotState,
    variant: Variant,
    rng: np.random.Generator,
    cfg: RunConfig,
    traits: Optional[tuple[int, BehaviourDescriptor]],
) -> None:
    """Synchronous end-of-lifetime update and selection for one robot.

    ``traits`` is the (fitness, descriptor) of the lifetime just run, or
    None for a robot that was dormant (it skips straight to selection).
    """
    def mutated(genome: Genome) -> Genome:
        return mutate(genome, rng, cfg.sigma_min, cfg.sigma_max, cfg.adapt_sigma)

    if variant is Variant.MEDEA_FPS:
        pairs = [robot.received_genomes[s] for s in sorted(robot.received_genomes)]
        robot.genome = mutated(fps_select(pairs, rng)) if pairs else None
        robot.received_genomes.clear()
        return

    if traits is not None:
        fitness, descriptor = traits
        robot.local_map.try_insert(Elite(robot.genome, fitness, descriptor))

    received = [robot.received_maps[s] for s in sorted(robot.received_maps)]
    if variant is Variant.M3 and traits is not None:
        for m in received:
            robot.local_map.merge_from(m)

    select_map, new_memory = build_select_map(
        variant, received, robot.local_map, robot.memory_map, rng
    )
    if variant is Variant.M2:
        robot.memory_map = new_memory if new_memory is not None else robot.memory_map

    if select_map is not None and select_map.occupied_count > 0:
        robot.genome = mutated(select_map.select_random_elite(rng))
    elif received and robot.local_map.occupied_count > 0:
        # Generation-0 bootstrap: archives were received but none carries
        # an elite yet; draw from the robot's own fresh LocalMap.
        robot.genome = mutated(robot.local_map.select_random_elite(rng))
    else:
        robot.genome = None

    robot.received_maps.clear()


def run_generation(
    world: World,
    variant: Variant,
    rng: np.random.Generator,
    cfg: RunConfig,
    generation: int,
) -> GenerationReport:
    """One lifetime of world steps plus the synchronous selection event."""
    world.begin_generation()
    was_active = [r.active for r in world.robots]
    for _ in range(cfg.lifetime):
        world.step()

    all_traits = [
        lifetime_traits(r) if was_active[r.id] else None for r in world.robots
    ]
    records = []
    for robot in world.robots:  # ascending id keeps the rng stream deterministic
        traits = all_traits[robot.id]
        end_of_lifetime(robot, variant, rng, cfg, traits)
        if traits is None:
            records.append(RobotRecord(robot.id, False, None, None, None,
                                       robot.local_map.occupied_count))
        else:
            fitness, descriptor = traits
            cell = bin_descriptor(descriptor, world.distance_bound, world.map_bins)
            records.append(RobotRecord(robot.id, True, fitness, descriptor, cell,
                                       robot.local_map.occupied_count))
    world.reset_lifetimes()
    return GenerationReport(generation, sum(was_active), records)


# -- whole-run driver ---------------------------------------------------------

GENERATIONS_CSV_HEADER = [
    "generation", "robotId", "active", "fitness", "trait1", "trait2",
    "cell_i", "cell_j", "localMapOcc",
]
SUMMARY_CSV_HEADER = ["generation", "activeCount", "expressedCells", "swarmMapCells"]


def build_world(cfg: RunConfig, rng: np.random.Generator,
                trace=None) -> World:
    arena = ArenaConfig(
        diameter=cfg.arena_diameter,
        robot_radius=cfg.robot_radius,
        token_radius=cfg.token_radius,
        sensor_range=cfg.sensor_range,
        broadcast_range=cfg.broadcast_range,
        max_speed=cfg.max_speed,
        max_turn_deg=cfg.max_turn_deg,
    )
    variant = parse_variant(cfg.variant)
    return World(
        arena, cfg.population, cfg.tokens_red, cfg.tokens_blue,
        rng=rng, map_bins=cfg.map_bins, distance_bound=cfg.distance_bound,
        genome_broadcast=not variant.uses_maps, trace=trace,
    )


def run_experiment(cfg: RunConfig, out_dir: Path) -> None:
    """Execute one full run and write its artifacts into ``out_dir``.

    Layout: run_info.json, generations.csv, summary.csv, expressed.map,
    maps/robot_NNN.map (archive variants only) and trace.csv when enabled.
    Identical (config, seed) produce byte-identical artifacts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    variant = parse_variant(cfg.variant)
    rng = np.random.default_rng(cfg.seed)

    trace_file = None
    trace_cb = None
    if cfg.trace:
        trace_file = open(out_dir / "trace.csv", "w", newline="")
        trace_writer = csv.writer(trace_file)
        trace_writer.writerow(["step", "robotId", "x", "y", "heading",
                               "tokensRed", "tokensBlue"])
        trace_cb = trace_writer.writerow

    world = build_world(cfg, rng, trace=trace_cb)
    for robot in world.robots:
        robot.genome = random_genome(rng, cfg.sigma_init)

    final_report: Optional[GenerationReport] = None
    try:
        with open(out_dir / "generations.csv", "w", newline="") as gen_f, \
                open(out_dir / "summary.csv", "w", newline="") as sum_f:
            gen_w = csv.writer(gen_f)
            gen_w.writerow(GENERATIONS_CSV_HEADER)
            sum_w = csv.writer(sum_f)
            sum_w.writerow(SUMMARY_CSV_HEADER)
            for g in range(cfg.generations):
                report = run_generation(world, variant, rng, cfg, g)
                final_report = report
                _write_generation_rows(gen_w, report)
                sum_w.writerow(_summary_row(world, variant, report))
    finally:
        if trace_file is not None:
            trace_file.close()

    expressed = expressed_map(final_report, world.map_bins, world.distance_bound)
    (out_dir / "expressed.map").write_text(expressed.dump_text())
    if variant.uses_maps:
        maps_dir = out_dir / "maps"
        maps_dir.mkdir(exist_ok=True)
        for robot in world.robots:
            path = maps_dir / f"robot_{robot.id:03d}.map"
            path.write_text(robot.local_map.dump_text(cfg.dump_genomes))

    info = {
        "variant": cfg.variant,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "software": software_versions(),
    }
    (out_dir / "run_info.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def expressed_map(report: Optional[GenerationReport], bins: int,
                  distance_bound: float) -> MapArchive:
    """Archive of the behaviours expressed by active robots in one
    generation (no genomes; it is an analysis artifact)."""
    out = MapArchive(bins, distance_bound)
    if report is not None:
        for fitness, descriptor in report.expressed():
            out.try_insert(Elite(None, fitness, descriptor))
    return out


def _write_generation_rows(writer, report: GenerationReport) -> None:
    for rec in report.records:
        if rec.active:
            writer.writerow([
                report.generation, rec.robot_id, 1, rec.fitness,
                repr(rec.descriptor.max_displacement), repr(rec.descriptor.red_ratio),
                rec.cell[0], rec.cell[1], rec.local_map_occ,
            ])
        else:
            writer.writerow([report.generation, rec.robot_id, 0, "", "", "", "", "",
                             rec.local_map_occ])


def _summary_row(world: World, variant: Variant, report: GenerationReport) -> list:
    expressed = expressed_map(report, world.map_bins, world.distance_bound)
    if variant.uses_maps:
        swarm = merge_maps([r.local_map for r in world.robots])
        swarm_cells = swarm.occupied_count
    else:
        swarm_cells = ""
    return [report.generation, report.active_count, expressed.occupied_count, swarm_cells]
