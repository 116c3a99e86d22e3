"""2D circular-arena world: kinematics, ray sensing, tokens, broadcasts.

The arena is a circle (diameter 956 units by default) containing a fixed
population of cylindrical robots and 150 red + 150 blue token cylinders.
Robots carry a genome-driven controller; each step they sense through 12
body-relative rays, move, collect tokens by contact (a consumed token
respawns at a uniform random free location, so per-colour counts are
conserved), and broadcast to every robot within radio range. What is
broadcast depends on the algorithm family: an archive snapshot (EDQD) or
the current genome plus fitness-so-far (mEDEA).

Stepping is deterministic for a fixed seed: all robots sense the state at
the start of the step, then moves, collisions and collections are resolved
sequentially in ascending robot id, consumed tokens respawn, and broadcast
contacts are delivered from the post-move positions.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple, Optional

import numpy as np

from . import _kernels
from .archive import BehaviourDescriptor, MapArchive
from .controller import N_INPUTS, N_OUTPUTS, SensorFrame
from .errors import ConfigurationError
from .genome import Genome

RED = 0
BLUE = 1

# 12 sensor rays: 7 spanning the frontal 90 degrees uniformly, the
# remaining 5 evenly spaced over the other 270 degrees.
RAY_ANGLES_DEG = (-45.0, -30.0, -15.0, 0.0, 15.0, 30.0, 45.0, 90.0, 135.0, 180.0, 225.0, 270.0)
RAY_ANGLES = np.deg2rad(np.array(RAY_ANGLES_DEG))

_PLACEMENT_ATTEMPTS = 10_000


@dataclass(frozen=True)
class ArenaConfig:
    """Geometry and motion limits. Sizes/speeds beyond the arena diameter
    and token counts are simulator defaults, freely configurable."""

    diameter: float = 956.0
    robot_radius: float = 5.0
    token_radius: float = 5.0
    sensor_range: float = 64.0
    broadcast_range: float = 32.0
    max_speed: float = 2.0
    max_turn_deg: float = 30.0
    floor_rgb: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        for name in ("diameter", "robot_radius", "token_radius", "sensor_range",
                     "broadcast_range", "max_speed", "max_turn_deg"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"arena.{name} must be positive")
        if self.broadcast_range > self.diameter:
            raise ConfigurationError("broadcast_range cannot exceed the arena diameter")

    @property
    def radius(self) -> float:
        return self.diameter / 2.0

    @property
    def max_turn_rad(self) -> float:
        return math.radians(self.max_turn_deg)


class Token(NamedTuple):
    position: np.ndarray
    colour: int  # RED or BLUE


class RobotState:
    """One robot: pose and lifetime accumulators live in the world's
    arrays; genome and archives live here. A robot is active iff it holds
    a genome."""

    __slots__ = ("id", "_world", "_genome", "local_map", "received_maps",
                 "received_genomes", "memory_map")

    def __init__(self, robot_id: int, world: "World"):
        self.id = robot_id
        self._world = world
        self._genome: Optional[Genome] = None
        self.local_map = MapArchive(world.map_bins, world.distance_bound)
        self.received_maps: dict[int, MapArchive] = {}
        self.received_genomes: dict[int, tuple[Genome, int]] = {}
        self.memory_map: Optional[MapArchive] = None

    @property
    def genome(self) -> Optional[Genome]:
        return self._genome

    @genome.setter
    def genome(self, value: Optional[Genome]):
        self._genome = value
        self._world._controllers_dirty = True

    @property
    def active(self) -> bool:
        return self._genome is not None

    @property
    def position(self) -> np.ndarray:
        return self._world._pos[self.id].copy()

    @property
    def heading(self) -> float:
        return float(self._world._heading[self.id])

    @property
    def start_position(self) -> np.ndarray:
        return self._world._start_pos[self.id].copy()

    @property
    def tokens_red(self) -> int:
        return int(self._world._tokens_red[self.id])

    @property
    def tokens_blue(self) -> int:
        return int(self._world._tokens_blue[self.id])

    @property
    def max_displacement(self) -> float:
        return float(self._world._max_disp[self.id])


def lifetime_traits(robot: RobotState) -> tuple[int, BehaviourDescriptor]:
    """Fitness (total tokens) and behaviour descriptor of the lifetime so
    far. The red ratio of a robot that collected nothing is 0.5."""
    red, blue = robot.tokens_red, robot.tokens_blue
    fitness = red + blue
    ratio = red / fitness if fitness > 0 else 0.5
    return fitness, BehaviourDescriptor(robot.max_displacement, ratio)


class World:
    """A single simulation instance; all mutation happens on one thread.

    Randomness (placement, respawns) comes exclusively from the generator
    handed in, so identical construction arguments yield identical
    trajectories.
    """

    def __init__(
        self,
        arena: ArenaConfig,
        n_robots: int,
        n_red: int = 150,
        n_blue: int = 150,
        *,
        rng: np.random.Generator,
        map_bins: int = 15,
        distance_bound: Optional[float] = None,
        genome_broadcast: bool = False,
        trace: Optional[Callable[[list], None]] = None,
    ):
        if n_robots < 1:
            raise ConfigurationError("need at least one robot")
        self.arena = arena
        self.n_robots = n_robots
        self.map_bins = map_bins
        self.distance_bound = float(distance_bound if distance_bound is not None else arena.diameter)
        self.genome_broadcast = genome_broadcast
        self.rng = rng
        self.trace = trace
        self.iteration = 0

        self._pos = np.zeros((n_robots, 2))
        self._heading = np.zeros(n_robots)
        self._start_pos = np.zeros((n_robots, 2))
        self._max_disp = np.zeros(n_robots)
        self._tokens_red = np.zeros(n_robots, dtype=np.int64)
        self._tokens_blue = np.zeros(n_robots, dtype=np.int64)

        n_tok = n_red + n_blue
        self._tok_pos = np.zeros((n_tok, 2))
        self._tok_colour = np.concatenate(
            [np.full(n_red, RED, dtype=np.int8), np.full(n_blue, BLUE, dtype=np.int8)]
        )
        self._tok_consumed = np.zeros(n_tok, dtype=np.bool_)

        self._place_robots()
        self._place_tokens()

        self.robots = [RobotState(i, self) for i in range(n_robots)]

        # Per-generation caches, rebuilt lazily after any genome change.
        self._controllers_dirty = True
        self._active_idx = np.zeros(0, dtype=np.int64)
        self._wstack = np.zeros((0, N_INPUTS, N_OUTPUTS))
        self._snapshots: dict[int, MapArchive] = {}

        self._frames = np.zeros((n_robots, N_INPUTS))
        self._near_buf = np.zeros(n_robots + n_tok, dtype=np.int64)
        self._pair_buf = np.zeros((max(1, n_robots * (n_robots - 1)), 2), dtype=np.int64)
        self._ground = np.asarray(arena.floor_rgb, dtype=np.float64)

    # -- placement ----------------------------------------------------------

    def _draw_point(self, max_radius: float) -> tuple[float, float]:
        r = max_radius * math.sqrt(self.rng.random())
        theta = 2.0 * math.pi * self.rng.random()
        return r * math.cos(theta), r * math.sin(theta)

    def _place_robots(self):
        a = self.arena
        limit = a.radius - a.robot_radius
        for i in range(self.n_robots):
            for attempt in range(_PLACEMENT_ATTEMPTS):
                x, y = self._draw_point(limit)
                d2 = (self._pos[:i, 0] - x) ** 2 + (self._pos[:i, 1] - y) ** 2
                if i == 0 or d2.min() >= (2.0 * a.robot_radius) ** 2:
                    break
            else:
                raise ConfigurationError("arena too crowded to place robots without overlap")
            self._pos[i] = (x, y)
            self._heading[i] = 2.0 * math.pi * self.rng.random()
        self._start_pos[:] = self._pos

    def _place_tokens(self):
        a = self.arena
        limit = a.radius - a.token_radius
        rt = a.robot_radius + a.token_radius
        for k in range(self._tok_pos.shape[0]):
            for attempt in range(_PLACEMENT_ATTEMPTS):
                x, y = self._draw_point(limit)
                d2r = (self._pos[:, 0] - x) ** 2 + (self._pos[:, 1] - y) ** 2
                if d2r.min() < rt * rt:
                    continue
                if k > 0:
                    d2t = (self._tok_pos[:k, 0] - x) ** 2 + (self._tok_pos[:k, 1] - y) ** 2
                    if d2t.min() < (2.0 * a.token_radius) ** 2:
                        continue
                break
            else:
                raise ConfigurationError("arena too crowded to place tokens without overlap")
            self._tok_pos[k] = (x, y)

    def _respawn_token(self, k: int):
        # Uniform point inside the arena, rejecting robot overlap so a
        # fresh token is never instantly re-collected.
        a = self.arena
        limit = a.radius - a.token_radius
        rt = a.robot_radius + a.token_radius
        for attempt in range(_PLACEMENT_ATTEMPTS):
            x, y = self._draw_point(limit)
            d2 = (self._pos[:, 0] - x) ** 2 + (self._pos[:, 1] - y) ** 2
            if d2.min() >= rt * rt:
                self._tok_pos[k] = (x, y)
                return
        raise ConfigurationError("arena too crowded to respawn a token")

    # -- inspection ---------------------------------------------------------

    def tokens(self) -> Iterator[Token]:
        for k in range(self._tok_pos.shape[0]):
            yield Token(self._tok_pos[k].copy(), int(self._tok_colour[k]))

    def token_counts(self) -> tuple[int, int]:
        red = int(np.count_nonzero(self._tok_colour == RED))
        return red, int(self._tok_colour.shape[0] - red)

    @property
    def active_count(self) -> int:
        return sum(1 for r in self.robots if r.active)

    def state_hash(self) -> str:
        """Digest of the full physical state; equal seeds must yield equal
        digests at every step."""
        h = hashlib.sha256()
        h.update(self.iteration.to_bytes(8, "little"))
        for arr in (self._pos, self._heading, self._start_pos, self._max_disp,
                    self._tokens_red, self._tokens_blue, self._tok_pos):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(bytes(1 if r.active else 0 for r in self.robots))
        return h.hexdigest()

    # -- sensing ------------------------------------------------------------

    def sense(self, robot_id: int) -> SensorFrame:
        """Sensor frame of one robot against the current world state."""
        idx = np.array([robot_id], dtype=np.int64)
        out = np.zeros((1, N_INPUTS))
        a = self.arena
        _kernels.kernel_sense(
            self._pos, self._heading, idx, self._tok_pos, self._tok_colour,
            a.robot_radius, a.token_radius, a.sensor_range, a.radius,
            RAY_ANGLES, self._ground, out, self._near_buf,
        )
        return SensorFrame(values=out[0])

    # -- generation plumbing -------------------------------------------------

    def begin_generation(self):
        """Rebuild controller caches and invalidate broadcast snapshots.

        Called automatically by step() after any genome change; archives
        only change between generations, so snapshots stay valid for a
        whole lifetime.
        """
        active = [r.id for r in self.robots if r.active]
        self._active_idx = np.array(active, dtype=np.int64)
        self._wstack = np.zeros((len(active), N_INPUTS, N_OUTPUTS))
        for a, rid in enumerate(active):
            self._wstack[a] = self.robots[rid].genome.weights.reshape(N_INPUTS, N_OUTPUTS)
        self._snapshots = {}
        self._controllers_dirty = False

    def _snapshot(self, sender_id: int) -> MapArchive:
        snap = self._snapshots.get(sender_id)
        if snap is None:
            snap = self.robots[sender_id].local_map.copy()
            self._snapshots[sender_id] = snap
        return snap

    def reset_lifetimes(self):
        """Zero the lifetime accumulators and restart displacement tracking
        from the current pose."""
        self._tokens_red[:] = 0
        self._tokens_blue[:] = 0
        self._max_disp[:] = 0.0
        self._start_pos[:] = self._pos

    # -- stepping -----------------------------------------------------------

    def step(self):
        """Advance the world by one tick (see module docstring for order)."""
        if self._controllers_dirty:
            self.begin_generation()
        a = self.arena
        idx = self._active_idx
        n_active = idx.shape[0]
        if n_active:
            frames = self._frames[:n_active]
            _kernels.kernel_sense(
                self._pos, self._heading, idx, self._tok_pos, self._tok_colour,
                a.robot_radius, a.token_radius, a.sensor_range, a.radius,
                RAY_ANGLES, self._ground, frames, self._near_buf,
            )
            motors = np.tanh(np.einsum("ai,aio->ao", frames, self._wstack))
            n_consumed = _kernels.kernel_move(
                self._pos, self._heading, self._start_pos, self._max_disp,
                self._tokens_red, self._tokens_blue, idx, motors,
                self._tok_pos, self._tok_colour, self._tok_consumed,
                a.radius, a.robot_radius, a.token_radius, a.max_speed, a.max_turn_rad,
            )
            if n_consumed:
                for k in np.nonzero(self._tok_consumed)[0]:
                    self._respawn_token(int(k))
                self._tok_consumed[:] = False
            n_pairs = _kernels.kernel_contacts(
                self._pos, idx, a.broadcast_range, self._pair_buf
            )
            if n_pairs:
                self._deliver(n_pairs)
        if self.trace is not None:
            for r in range(self.n_robots):
                self.trace([self.iteration, r,
                            float(self._pos[r, 0]), float(self._pos[r, 1]),
                            float(self._heading[r]),
                            int(self._tokens_red[r]), int(self._tokens_blue[r])])
        self.iteration += 1

    def _deliver(self, n_pairs: int):
        robots = self.robots
        pairs = self._pair_buf
        if self.genome_broadcast:
            # mEDEA payload: (current genome, fitness so far), latest wins.
            for p in range(n_pairs):
                s = int(pairs[p, 0])
                r = int(pairs[p, 1])
                fit = int(self._tokens_red[s] + self._tokens_blue[s])
                robots[r].received_genomes[s] = (robots[s].genome, fit)
        else:
            # Archive payload: a snapshot copy, constant within one
            # generation, so the first delivery per sender already equals
            # the latest.
            for p in range(n_pairs):
                s = int(pairs[p, 0])
                rec = robots[int(pairs[p, 1])].received_maps
                if s not in rec:
                    rec[s] = self._snapshot(s)
