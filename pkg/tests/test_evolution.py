import filecmp

import numpy as np
import pytest

from conftest import dense_cfg
from edqd.archive import BehaviourDescriptor, Elite, MapArchive
from edqd.evolution import (
    Variant,
    build_select_map,
    build_world,
    end_of_lifetime,
    expressed_map,
    fps_select,
    parse_variant,
    run_experiment,
    run_generation,
)
from edqd.genome import random_genome


def mk_map(*elites, bound=956.0):
    m = MapArchive(15, bound)
    for fit, t1, t2, genome in elites:
        m.try_insert(Elite(genome, fit, BehaviourDescriptor(t1, t2)))
    return m


def run_world(cfg, generations=None, seed=None):
    rng = np.random.default_rng(seed if seed is not None else cfg.seed)
    world = build_world(cfg, rng)
    for robot in world.robots:
        robot.genome = random_genome(rng, cfg.sigma_init)
    variant = parse_variant(cfg.variant)
    reports = []
    for g in range(generations if generations is not None else cfg.generations):
        reports.append(run_generation(world, variant, rng, cfg, g))
    return world, reports


# -- variant parsing ----------------------------------------------------------

def test_parse_variant_accepts_all_names():
    assert parse_variant("R") is Variant.R
    assert parse_variant("medea-FPS") is Variant.MEDEA_FPS
    with pytest.raises(ValueError):
        parse_variant("M9")


# -- fitness proportionate selection -------------------------------------------

def test_fps_all_zero_is_uniform(rng):
    genomes = [random_genome(rng) for _ in range(4)]
    pairs = [(g, 0) for g in genomes]
    counts = {id(g): 0 for g in genomes}
    for _ in range(8000):
        counts[id(fps_select(pairs, rng))] += 1
    for c in counts.values():
        assert abs(c - 2000) < 200  # ~4.5 sigma


def test_fps_is_proportional(rng):
    g1, g3 = random_genome(rng), random_genome(rng)
    pairs = [(g1, 1), (g3, 3)]
    hits = sum(fps_select(pairs, rng) is g3 for _ in range(10_000))
    assert abs(hits / 10_000 - 0.75) < 0.02


def test_fps_needs_candidates(rng):
    with pytest.raises(ValueError):
        fps_select([], rng)


# -- SelectMap construction -----------------------------------------------------

def test_select_map_r_is_one_received_map_verbatim(rng):
    g1, g2 = random_genome(rng), random_genome(rng)
    m1 = mk_map((3, 100.0, 0.2, g1))
    m2 = mk_map((5, 700.0, 0.8, g2))
    local = MapArchive()
    picked, memory = build_select_map(Variant.R, [m1, m2], local, None, rng)
    assert picked in (m1, m2)
    assert memory is None


def test_select_map_m1_unions_disjoint_cells(rng):
    m1 = mk_map((3, 100.0, 0.2, None))
    m2 = mk_map((5, 700.0, 0.8, None))
    merged, _ = build_select_map(Variant.M1, [m1, m2], MapArchive(), None, rng)
    assert merged.occupied_count == 2


def test_select_map_m2_merges_memory_and_updates_it(rng):
    received = mk_map((3, 100.0, 0.2, None))
    memory = mk_map((5, 700.0, 0.8, None))
    merged, new_memory = build_select_map(Variant.M2, [received], MapArchive(), memory, rng)
    assert merged.occupied_count == 2
    assert new_memory is merged
    # memory alone still selects when nothing was received
    merged2, new_memory2 = build_select_map(Variant.M2, [], MapArchive(), new_memory, rng)
    assert merged2.occupied_count == 2
    assert new_memory2 is not new_memory  # a fresh copy each generation


def test_select_map_m3_includes_local(rng):
    local = mk_map((4, 400.0, 0.5, None))
    merged, _ = build_select_map(Variant.M3, [], local, None, rng)
    assert merged.occupied_count == 1


# -- end_of_lifetime ------------------------------------------------------------

def make_lone_world(variant="M1", **overrides):
    cfg = dense_cfg(variant=variant, population=2, **overrides)
    rng = np.random.default_rng(cfg.seed)
    world = build_world(cfg, rng)
    return cfg, rng, world


def test_robot_with_no_reception_goes_inactive(rng):
    cfg, _, world = make_lone_world("M1")
    robot = world.robots[0]
    robot.genome = random_genome(rng)
    traits = (2, BehaviourDescriptor(10.0, 0.5))
    end_of_lifetime(robot, Variant.M1, rng, cfg, traits)
    assert robot.genome is None
    assert robot.local_map.occupied_count == 1  # own elite was archived


def test_bootstrap_falls_back_to_own_map(rng):
    # Generation 0: maps were received but none carries an elite yet.
    cfg, _, world = make_lone_world("M1")
    robot = world.robots[0]
    robot.genome = random_genome(rng)
    robot.received_maps[1] = MapArchive(cfg.map_bins, world.distance_bound)
    end_of_lifetime(robot, Variant.M1, rng, cfg, (2, BehaviourDescriptor(10.0, 0.5)))
    assert robot.genome is not None
    assert robot.received_maps == {}


def test_m2_memory_keeps_elite_selectable_across_silence(rng):
    cfg, _, world = make_lone_world("M2")
    robot = world.robots[0]
    donor = random_genome(rng)
    robot.received_maps[1] = mk_map((4, 200.0, 0.4, donor), bound=world.distance_bound)
    end_of_lifetime(robot, Variant.M2, rng, cfg, None)  # dormant robot, reception only
    assert robot.genome is not None
    assert robot.memory_map.occupied_count == 1
    # next generation: nothing received, memory alone keeps it alive
    end_of_lifetime(robot, Variant.M2, rng, cfg, None)
    assert robot.genome is not None


def test_m3_adopts_received_elites_into_local_map(rng):
    cfg, _, world = make_lone_world("M3")
    robot = world.robots[0]
    robot.genome = random_genome(rng)
    donor = random_genome(rng)
    robot.received_maps[1] = mk_map((9, 800.0, 0.9, donor), bound=world.distance_bound)
    end_of_lifetime(robot, Variant.M3, rng, cfg, (1, BehaviourDescriptor(10.0, 0.5)))
    cells = {coord for coord, _ in robot.local_map.items()}
    assert len(cells) == 2  # own elite + adopted foreign elite
    genomes = [e.genome for e in robot.local_map.elites()]
    assert donor in genomes


def test_medea_robot_selects_by_fitness_and_clears(rng):
    cfg, _, world = make_lone_world("medea-fps")
    robot = world.robots[0]
    robot.genome = random_genome(rng)
    donor = random_genome(rng)
    robot.received_genomes[1] = (donor, 5)
    end_of_lifetime(robot, Variant.MEDEA_FPS, rng, cfg, (0, BehaviourDescriptor(0.0, 0.5)))
    assert robot.genome is not None
    assert robot.received_genomes == {}
    assert robot.local_map.occupied_count == 0  # the baseline keeps no archive


def test_medea_robot_with_empty_list_goes_inactive(rng):
    cfg, _, world = make_lone_world("medea-fps")
    robot = world.robots[0]
    robot.genome = random_genome(rng)
    end_of_lifetime(robot, Variant.MEDEA_FPS, rng, cfg, (0, BehaviourDescriptor(0.0, 0.5)))
    assert robot.genome is None


# -- run_generation ---------------------------------------------------------------

def test_all_inactive_generation_is_static():
    cfg = dense_cfg("M1", population=4)
    rng = np.random.default_rng(cfg.seed)
    world = build_world(cfg, rng)  # nobody was given a genome
    report = run_generation(world, Variant.M1, rng, cfg, 0)
    assert report.active_count == 0
    assert all(not r.active for r in report.records)
    assert world.active_count == 0


def test_population_one_r_dies_after_first_lifetime():
    cfg = dense_cfg("R", population=1, generations=3)
    world, reports = run_world(cfg)
    assert reports[0].active_count == 1
    assert reports[1].active_count == 0
    assert reports[2].active_count == 0
    assert world.robots[0].local_map.occupied_count == 1


def test_dense_start_stays_alive_generation_one():
    cfg = dense_cfg("M1", population=12, lifetime=80)
    _, reports = run_world(cfg, generations=2)
    assert reports[1].active_count > 0


def test_generation_report_records_expressed_cells():
    cfg = dense_cfg("M1", population=6)
    _, reports = run_world(cfg, generations=1)
    rep = reports[0]
    for rec in rep.records:
        assert rec.active
        assert rec.cell is not None
        assert rec.local_map_occ >= 1
    em = expressed_map(rep, 15, 150.0)
    assert 1 <= em.occupied_count <= 6


def test_local_map_occupancy_never_decreases():
    cfg = dense_cfg("M3", population=10, lifetime=60, generations=8)
    rng = np.random.default_rng(cfg.seed)
    world = build_world(cfg, rng)
    for robot in world.robots:
        robot.genome = random_genome(rng, cfg.sigma_init)
    prev = [0] * cfg.population
    for g in range(cfg.generations):
        run_generation(world, Variant.M3, rng, cfg, g)
        occ = [r.local_map.occupied_count for r in world.robots]
        assert all(a >= b for a, b in zip(occ, prev))
        prev = occ


def test_m2_memory_occupancy_never_decreases():
    cfg = dense_cfg("M2", population=10, lifetime=60, generations=8)
    rng = np.random.default_rng(cfg.seed)
    world = build_world(cfg, rng)
    for robot in world.robots:
        robot.genome = random_genome(rng, cfg.sigma_init)
    prev = [0] * cfg.population
    for g in range(cfg.generations):
        run_generation(world, Variant.M2, rng, cfg, g)
        occ = [0 if r.memory_map is None else r.memory_map.occupied_count
               for r in world.robots]
        assert all(a >= b for a, b in zip(occ, prev))
        prev = occ


def test_local_maps_hold_only_self_executed_genomes_except_m3():
    # Track every genome each robot expressed; under R/M1/M2 its LocalMap
    # may never contain anything else, under M3 it eventually must.
    for variant_name, foreign_expected in (("M1", False), ("M3", True)):
        cfg = dense_cfg(variant_name, population=10, lifetime=60, generations=6)
        rng = np.random.default_rng(cfg.seed)
        world = build_world(cfg, rng)
        executed = {r.id: [] for r in world.robots}
        for robot in world.robots:
            robot.genome = random_genome(rng, cfg.sigma_init)
            executed[robot.id].append(robot.genome)
        variant = parse_variant(cfg.variant)
        for g in range(cfg.generations):
            run_generation(world, variant, rng, cfg, g)
            for robot in world.robots:
                if robot.genome is not None:
                    executed[robot.id].append(robot.genome)
        foreign = False
        for robot in world.robots:
            own = executed[robot.id]
            for e in robot.local_map.elites():
                if all(e.genome is not g for g in own):
                    foreign = True
        assert foreign == foreign_expected, variant_name


def test_receivers_reactivate_next_generation():
    # Every robot that received at least one map during a generation must
    # be active in the next one.
    cfg = dense_cfg("M1", population=10, lifetime=60, generations=4)
    rng = np.random.default_rng(cfg.seed)
    world = build_world(cfg, rng)
    for robot in world.robots:
        robot.genome = random_genome(rng, cfg.sigma_init)
    variant = parse_variant(cfg.variant)
    for g in range(cfg.generations):
        run_generation(world, variant, rng, cfg, g)
    receivers = set()
    world.begin_generation()
    for _ in range(cfg.lifetime):
        world.step()
        for r in world.robots:
            if r.received_maps:
                receivers.add(r.id)
    from edqd.simworld import lifetime_traits

    traits = {r.id: lifetime_traits(r) if r.active else None for r in world.robots}
    for r in world.robots:
        end_of_lifetime(r, variant, rng, cfg, traits[r.id])
    active_next = {r.id for r in world.robots if r.active}
    assert receivers <= active_next


# -- run_experiment ----------------------------------------------------------------

def test_zero_generations_writes_initialization_artifacts(tmp_path):
    cfg = dense_cfg("M1", generations=0)
    run_experiment(cfg, tmp_path / "run")
    out = tmp_path / "run"
    assert (out / "run_info.json").exists()
    gens = (out / "generations.csv").read_text().splitlines()
    assert len(gens) == 1  # header only
    assert (out / "expressed.map").read_text() == ""
    assert sorted(p.name for p in (out / "maps").iterdir()) == [
        f"robot_{i:03d}.map" for i in range(cfg.population)
    ]


def test_identical_seeds_are_byte_identical(tmp_path):
    cfg = dense_cfg("M2", generations=4)
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")

    def assert_equal_tree(c):
        assert not c.left_only and not c.right_only and not c.diff_files
        for sub in c.subdirs.values():
            assert_equal_tree(sub)

    assert_equal_tree(cmp)


def test_medea_run_skips_map_dumps(tmp_path):
    cfg = dense_cfg("medea-fps", generations=2)
    run_experiment(cfg, tmp_path / "run")
    assert not (tmp_path / "run" / "maps").exists()
    summary = (tmp_path / "run" / "summary.csv").read_text().splitlines()
    assert summary[1].endswith(",")  # swarm column empty for the baseline


def test_trace_flag_writes_trace(tmp_path):
    cfg = dense_cfg("M1", generations=1, trace=True)
    run_experiment(cfg, tmp_path / "run")
    lines = (tmp_path / "run" / "trace.csv").read_text().splitlines()
    assert lines[0] == "step,robotId,x,y,heading,tokensRed,tokensBlue"
    assert len(lines) == 1 + cfg.lifetime * cfg.population
