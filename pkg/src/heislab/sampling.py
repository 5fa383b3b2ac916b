"""Seeded, chunk-deterministic Monte Carlo plumbing.

Every estimator draws from per-chunk generators derived from a master seed,
so results depend only on (seed, chunk_size) and never on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

DEFAULT_CHUNK = 50_000


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by center and per-axis half widths."""

    center: np.ndarray
    half: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        h = np.asarray(self.half, dtype=float)
        if c.shape != h.shape or c.ndim != 1:
            raise ValueError("center and half must be 1-d arrays of equal length")
        if np.any(h < 0):
            raise ValueError("half widths must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half", h)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * self.half))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.uniform(-1.0, 1.0, size=(size, self.dim))
        return self.center + u * self.half

    def contains(self, pts: np.ndarray, pad: float = 0.0) -> np.ndarray:
        return np.all(np.abs(pts - self.center) <= self.half + pad, axis=-1)


def chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    """Generator for one chunk, independent of all other chunks."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,)))


def chunk_sizes(n_total: int, chunk: int) -> list[int]:
    sizes = [chunk] * (n_total // chunk)
    if n_total % chunk:
        sizes.append(n_total % chunk)
    return sizes


def mc_mean(
    sampler: Callable[[np.random.Generator, int], np.ndarray],
    n_samples: int,
    seed: int,
    chunk: int = DEFAULT_CHUNK,
) -> tuple[float, float]:
    """Mean and standard error of a sampled quantity over n_samples draws.

    ``sampler(rng, size)`` must return one value per draw.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    total = 0.0
    total_sq = 0.0
    count = 0
    for idx, size in enumerate(chunk_sizes(n_samples, chunk)):
        vals = np.asarray(sampler(chunk_rng(seed, idx), size), dtype=float)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
        count += size
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    return mean, float(np.sqrt(var / count))
