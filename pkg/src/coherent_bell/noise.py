"""Reproducible random phase traces for the noise field.

Streams are derived with numpy's ``SeedSequence`` spawn keys, so
``(seed, stream)`` always maps to the same PCG64 stream no matter which
worker draws it or in what order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi


class PhaseModel(str, enum.Enum):
    PIECEWISE_UNIFORM = "piecewise"
    WIENER = "wiener"


@dataclass(frozen=True)
class PhaseProcess:
    kind: PhaseModel = PhaseModel.PIECEWISE_UNIFORM
    seed: int = 0
    dwell_samples: int = 1
    diffusion_rate: float = 0.0
    stream: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "kind", PhaseModel(self.kind))
        object.__setattr__(self, "stream", tuple(int(s) for s in self.stream))
        if int(self.dwell_samples) != self.dwell_samples or self.dwell_samples < 1:
            raise ValueError(f"dwell_samples must be a positive integer, got {self.dwell_samples}")
        if not (self.diffusion_rate >= 0.0 and math.isfinite(self.diffusion_rate)):
            raise ValueError(f"diffusion_rate must be finite and >= 0, got {self.diffusion_rate}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if any(s < 0 for s in self.stream):
            raise ValueError("stream ids must be non-negative")

    def with_stream(self, *ids: int) -> "PhaseProcess":
        """Child process on the sub-stream ``self.stream + ids``."""
        return replace(self, stream=self.stream + tuple(ids))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(seq))

    @property
    def correlation_length(self) -> int:
        """Samples per statistically independent phase value (for error bars)."""
        if self.kind is PhaseModel.PIECEWISE_UNIFORM:
            return self.dwell_samples
        return 1


@dataclass(frozen=True, eq=False)
class PhaseTrace:
    samples: np.ndarray
    process: PhaseProcess | None = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("a phase trace needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("phase trace contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @classmethod
    def uniform_grid(cls, n: int) -> "PhaseTrace":
        """Deterministic equally spaced phases 2*pi*k/n, k = 0..n-1."""
        return cls(TWO_PI * np.arange(n) / n)


def wrap_phase(phi):
    """Wrap into [0, 2*pi); guards the float case where mod returns exactly 2*pi."""
    out = np.mod(phi, TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def sample_phase_trace(process: PhaseProcess, n_samples: int) -> PhaseTrace:
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    rng = process.generator()
    if process.kind is PhaseModel.PIECEWISE_UNIFORM:
        n_seg = -(-n_samples // process.dwell_samples)
        seg = rng.uniform(0.0, TWO_PI, size=n_seg)
        phi = np.repeat(seg, process.dwell_samples)[:n_samples]
    else:
        start = rng.uniform(0.0, TWO_PI)
        steps = rng.normal(0.0, math.sqrt(process.diffusion_rate), size=n_samples - 1)
        phi = start + np.concatenate(([0.0], np.cumsum(steps)))
    return PhaseTrace(wrap_phase(phi), process)


def empirical_phase_uniformity(trace: PhaseTrace, bins: int) -> float:
    """Pearson chi-square of the binned phases against a flat histogram.

    Under uniformity the statistic is chi-square with ``bins - 1`` degrees
    of freedom.
    """
    if bins < 1:
        raise ValueError("bins must be positive")
    n = len(trace)
    if n < 10 * bins:
        raise ValueError(f"need at least {10 * bins} samples for {bins} bins, got {n}")
    idx = np.floor(wrap_phase(trace.samples) / TWO_PI * bins).astype(int)
    counts = np.bincount(np.clip(idx, 0, bins - 1), minlength=bins)
    expected = n / bins
    return float(np.sum((counts - expected) ** 2) / expected)
