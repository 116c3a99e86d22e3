"""Sensor-frame encoding and the feed-forward robot controller.

The controller is a single fully-connected layer from 63 inputs to 2
outputs with tanh activation and no bias: 3 inputs for the RGB ground
colour plus 5 values for each of the 12 distance sensors (normalized
distance and a one-hot object class: robot, wall, red token, blue
token). 63 x 2 = 126 weights, which is exactly the genome size, so any
hidden layer or bias term is ruled out by the weight count.

Weight layout is input-major: weight[i * 2 + k] connects input i to
output k (0 = translation, 1 = rotation). Genome dumps rely on this
layout being fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .genome import GENOME_SIZE, Genome

N_GROUND_INPUTS = 3
N_RAYS = 12
VALUES_PER_RAY = 5  # distance + one-hot(robot, wall, red token, blue token)
N_INPUTS = N_GROUND_INPUTS + N_RAYS * VALUES_PER_RAY
N_OUTPUTS = 2
assert N_INPUTS * N_OUTPUTS == GENOME_SIZE

# Index of each class flag within a ray's 5-value block.
FLAG_ROBOT = 1
FLAG_WALL = 2
FLAG_RED = 3
FLAG_BLUE = 4


@dataclass(frozen=True)
class SensorFrame:
    """One tick of sensor input, stored as the flat 63-value vector.

    Layout: values[0:3] = ground RGB; values[3 + 5*r : 8 + 5*r] = ray r.
    A ray that hits nothing reports distance 1 and all-zero flags.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (N_INPUTS,):
            raise ValueError(f"sensor frame must have {N_INPUTS} values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_parts(cls, ground_rgb, rays) -> "SensorFrame":
        """Build from a length-3 RGB triple and a (12, 5) per-ray block."""
        rays = np.asarray(rays, dtype=np.float64)
        if rays.shape != (N_RAYS, VALUES_PER_RAY):
            raise ValueError(f"rays must have shape ({N_RAYS}, {VALUES_PER_RAY}), got {rays.shape}")
        values = np.concatenate([np.asarray(ground_rgb, dtype=np.float64).ravel(), rays.ravel()])
        return cls(values=values)

    @property
    def ground_rgb(self) -> np.ndarray:
        return self.values[:N_GROUND_INPUTS]

    @property
    def rays(self) -> np.ndarray:
        """(12, 5) view: one row per sensor ray."""
        return self.values[N_GROUND_INPUTS:].reshape(N_RAYS, VALUES_PER_RAY)


class MotorCommand(NamedTuple):
    translation: float  # fraction of max speed, in [-1, 1]
    rotation: float     # fraction of max turn rate, in [-1, 1]


def forward(genome: Genome, frame: SensorFrame) -> MotorCommand:
    """Run the controller once: tanh(inputs @ W) with W shaped (63, 2)."""
    w = genome.weights.reshape(N_INPUTS, N_OUTPUTS)
    out = np.tanh(frame.values @ w)
    return MotorCommand(translation=float(out[0]), rotation=float(out[1]))
