"""Genome representation and the self-adaptive Gaussian mutation operator.

A genome is a flat vector of 126 neural-network weights plus a scalar
mutation step size sigma. Mutation is the standard evolution-strategies
log-normal scheme: sigma is perturbed multiplicatively first, then every
weight receives additive Gaussian noise drawn at the new step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GENOME_SIZE = 126
SIGMA_INIT = 0.1
SIGMA_MIN = 0.01
SIGMA_MAX = 0.5
WEIGHT_INIT_RANGE = 1.0
WEIGHT_LIMIT = 10.0

# Learning rate for the log-normal sigma update, 1/sqrt(2n).
TAU = 1.0 / math.sqrt(2.0 * GENOME_SIZE)


@dataclass(frozen=True, eq=False)
class Genome:
    """Immutable weight vector + mutation step size.

    The weight array is copied on construction and marked read-only, so
    genomes can be shared freely between archives and broadcast snapshots.
    """

    weights: np.ndarray
    sigma: float

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (GENOME_SIZE,):
            raise ValueError(f"genome must have exactly {GENOME_SIZE} weights, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("genome weights must be finite")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be a positive finite real, got {self.sigma}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sigma", float(self.sigma))

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return self.sigma == other.sigma and np.array_equal(self.weights, other.weights)

    __hash__ = None

    def to_hex(self) -> str:
        """Little-endian f8 hex of the 126 weights followed by sigma (127 values)."""
        buf = np.empty(GENOME_SIZE + 1, dtype="<f8")
        buf[:GENOME_SIZE] = self.weights
        buf[GENOME_SIZE] = self.sigma
        return buf.tobytes().hex()

    @classmethod
    def from_hex(cls, text: str) -> "Genome":
        raw = bytes.fromhex(text)
        vals = np.frombuffer(raw, dtype="<f8")
        if vals.shape != (GENOME_SIZE + 1,):
            raise ValueError(f"genome hex must encode {GENOME_SIZE + 1} f8 values, got {vals.shape[0]}")
        return cls(weights=vals[:GENOME_SIZE], sigma=float(vals[GENOME_SIZE]))


def random_genome(rng: np.random.Generator, sigma: float = SIGMA_INIT) -> Genome:
    """Fresh genome: weights uniform in [-1, 1], sigma at its initial value."""
    weights = rng.uniform(-WEIGHT_INIT_RANGE, WEIGHT_INIT_RANGE, GENOME_SIZE)
    return Genome(weights=weights, sigma=sigma)


def mutate(
    genome: Genome,
    rng,
    sigma_min: float = SIGMA_MIN,
    sigma_max: float = SIGMA_MAX,
    adapt_sigma: bool = True,
) -> Genome:
    """Return a mutated copy; the input genome is never modified.

    sigma' = clamp(sigma * exp(tau * N(0,1)), sigma_min, sigma_max), then
    each weight gets + N(0, sigma'^2) and is clamped to the weight limit.
    With adapt_sigma=False the step size is inherited unchanged (fixed-sigma
    ablation); it is still clamped into [sigma_min, sigma_max].
    """
    if adapt_sigma:
        sigma_new = genome.sigma * math.exp(TAU * float(rng.standard_normal()))
    else:
        sigma_new = genome.sigma
    sigma_new = min(max(sigma_new, sigma_min), sigma_max)
    noise = np.asarray(rng.standard_normal(GENOME_SIZE), dtype=np.float64)
    weights = np.clip(genome.weights + sigma_new * noise, -WEIGHT_LIMIT, WEIGHT_LIMIT)
    return Genome(weights=weights, sigma=sigma_new)
