"""Decentralised quality-diversity evolution for robot swarms.

Simulator, experiment harness and analysis tools for EDQD (robots that
maintain, broadcast and merge local MAP-Elites archives) and the
mEDEA-fps baseline.
"""

__version__ = "0.1.0"

from .archive import BehaviourDescriptor, CellCoord, Elite, MapArchive, bin_descriptor, merge_maps
from .config import RunConfig, splitmix64
from .controller import MotorCommand, SensorFrame, forward
from .genome import Genome, mutate, random_genome
from .simworld import ArenaConfig, RobotState, World, lifetime_traits

__all__ = [
    "ArenaConfig",
    "BehaviourDescriptor",
    "CellCoord",
    "Elite",
    "Genome",
    "MapArchive",
    "MotorCommand",
    "RobotState",
    "RunConfig",
    "SensorFrame",
    "World",
    "bin_descriptor",
    "forward",
    "lifetime_traits",
    "merge_maps",
    "mutate",
    "random_genome",
    "splitmix64",
    "__version__",
]
