import math

import numpy as np
import pytest

from edqd.controller import (
    N_INPUTS,
    N_OUTPUTS,
    N_RAYS,
    VALUES_PER_RAY,
    MotorCommand,
    SensorFrame,
    forward,
)
from edqd.genome import GENOME_SIZE, Genome, random_genome


def empty_frame():
    rays = np.zeros((N_RAYS, VALUES_PER_RAY))
    rays[:, 0] = 1.0  # nothing sensed: distance 1, flags 0
    return SensorFrame.from_parts((1.0, 1.0, 1.0), rays)


def test_shapes_are_the_contract():
    assert N_INPUTS == 63
    assert N_OUTPUTS == 2
    assert N_INPUTS * N_OUTPUTS == GENOME_SIZE == 126


def test_zero_weights_give_zero_motors():
    g = Genome(weights=np.zeros(GENOME_SIZE), sigma=0.1)
    assert forward(g, empty_frame()) == MotorCommand(0.0, 0.0)


def test_single_weight_hand_computed():
    # weight[0] connects input 0 (ground R) to output 0 (translation):
    # ground (1,0,0), everything else zero -> translation tanh(1).
    w = np.zeros(GENOME_SIZE)
    w[0] = 1.0
    g = Genome(weights=w, sigma=0.1)
    frame = SensorFrame.from_parts((1.0, 0.0, 0.0), np.zeros((N_RAYS, VALUES_PER_RAY)))
    out = forward(g, frame)
    assert out.translation == pytest.approx(math.tanh(1.0), abs=1e-15)
    assert out.rotation == 0.0


def test_saturation_at_extreme_weights():
    g = Genome(weights=np.full(GENOME_SIZE, 10.0), sigma=0.1)
    frame = SensorFrame(values=np.ones(N_INPUTS))
    out = forward(g, frame)
    assert abs(out.translation - 1.0) < 1e-12
    assert abs(out.rotation - 1.0) < 1e-12


def test_outputs_bounded_and_deterministic(rng):
    for _ in range(200):
        g = random_genome(rng)
        frame = SensorFrame(values=rng.uniform(0, 1, N_INPUTS))
        a = forward(g, frame)
        b = forward(g, frame)
        assert a == b
        assert -1.0 < a.translation < 1.0
        assert -1.0 < a.rotation < 1.0


def test_weight_layout_is_input_major(rng):
    # Permuting two sensor blocks together with their weight rows must
    # leave the output unchanged.
    g = random_genome(rng)
    rays = rng.uniform(0, 1, (N_RAYS, VALUES_PER_RAY))
    frame = SensorFrame.from_parts(rng.uniform(0, 1, 3), rays)
    base = forward(g, frame)

    swapped = rays.copy()
    swapped[[2, 9]] = swapped[[9, 2]]
    frame_swapped = SensorFrame.from_parts(frame.ground_rgb, swapped)

    w = g.weights.reshape(N_INPUTS, N_OUTPUTS).copy()
    r2 = slice(3 + 2 * VALUES_PER_RAY, 3 + 3 * VALUES_PER_RAY)
    r9 = slice(3 + 9 * VALUES_PER_RAY, 3 + 10 * VALUES_PER_RAY)
    w[r2], w[r9] = w[r9].copy(), w[r2].copy()
    g_swapped = Genome(weights=w.reshape(GENOME_SIZE), sigma=g.sigma)

    out = forward(g_swapped, frame_swapped)
    assert out.translation == pytest.approx(base.translation, abs=1e-15)
    assert out.rotation == pytest.approx(base.rotation, abs=1e-15)


def test_frame_shape_validation():
    with pytest.raises(ValueError):
        SensorFrame(values=np.zeros(10))
    with pytest.raises(ValueError):
        SensorFrame.from_parts((1, 1, 1), np.zeros((5, 5)))


def test_frame_views(rng):
    rays = rng.uniform(0, 1, (N_RAYS, VALUES_PER_RAY))
    frame = SensorFrame.from_parts((0.25, 0.5, 0.75), rays)
    assert np.allclose(frame.ground_rgb, (0.25, 0.5, 0.75))
    assert np.allclose(frame.rays, rays)
