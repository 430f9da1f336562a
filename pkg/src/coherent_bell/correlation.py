"""Multiply the two detector traces, average, and normalize.

Normalization divides by the magnitude of the mean product measured at
theta1 = theta2 = 0 for the same preparation, the largest value the
correlation can reach.  For K = 1 that magnitude is 1/2.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import polarization as pol
from .bench import BeatTrace, BenchConfig, preparation, simulate_beat_traces
from .noise import PhaseProcess, sample_phase_trace

CALIBRATION_STREAM = 0
SCAN_STREAM = 1


@dataclass(frozen=True)
class CorrelationEstimate:
    raw_mean: float
    std_error: float
    n_samples: int
    normalized_value: float | None = None
    calibration: float | None = None
    normalized_std_error: float | None = None

    def normalize(self, calibration) -> "CorrelationEstimate":
        """Divide by a calibration magnitude (a float or a calibration estimate).

        When the calibration carries its own standard error it is propagated
        into ``normalized_std_error``.
        """
        if isinstance(calibration, CorrelationEstimate):
            cal, cal_err = abs(calibration.raw_mean), calibration.std_error
        else:
            cal, cal_err = float(calibration), 0.0
        if not cal > 0:
            raise ValueError(f"calibration magnitude must be positive, got {cal}")
        value = self.raw_mean / cal
        err = math.hypot(self.std_error / cal, value * cal_err / cal)
        return replace(self, normalized_value=value, calibration=cal, normalized_std_error=err)


def multiply_traces(t1, t2) -> np.ndarray:
    a = t1.samples if isinstance(t1, BeatTrace) else np.asarray(t1, dtype=float)
    b = t2.samples if isinstance(t2, BeatTrace) else np.asarray(t2, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"trace lengths differ: {a.size} vs {b.size}")
    return a * b


def estimate_correlation(product, correlation_length: int = 1) -> CorrelationEstimate:
    """Sample mean of a product trace and its standard error.

    ``correlation_length`` > 1 (piecewise phases held for several samples)
    shrinks the effective sample count to n / correlation_length.
    """
    product = np.asarray(product, dtype=float)
    n = product.size
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mean = float(np.mean(product))
    n_eff = max(n / max(int(correlation_length), 1), 1.0)
    sd = float(np.std(product, ddof=1))
    return CorrelationEstimate(mean, sd / math.sqrt(n_eff), n)


def measure(prep, theta1, theta2, process: PhaseProcess, n_samples: int,
            config: BenchConfig | None = None) -> CorrelationEstimate:
    """Run the bench once on ``process``'s stream and estimate the raw correlation."""
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    phases = sample_phase_trace(process, n_samples)
    d1, d2 = simulate_beat_traces(prep, theta1, theta2, phases, config)
    return estimate_correlation(multiply_traces(d1, d2), process.correlation_length)


def calibration_estimate(prep, config: BenchConfig | None = None, n_samples: int = 100_000,
                         seed: int | PhaseProcess = 0) -> CorrelationEstimate:
    process = seed if isinstance(seed, PhaseProcess) else PhaseProcess(seed=seed)
    return measure(prep, 0.0, 0.0, process.with_stream(CALIBRATION_STREAM), n_samples, config)


def calibrate(prep, config: BenchConfig | None = None, n_samples: int = 100_000,
              seed: int | PhaseProcess = 0) -> float:
    """|mean product| at theta1 = theta2 = 0 on the dedicated calibration stream."""
    return abs(calibration_estimate(prep, config, n_samples, seed).raw_mean)


@dataclass(frozen=True)
class ScanPoint:
    theta2: float
    estimate: CorrelationEstimate

    @property
    def value(self) -> float:
        return self.estimate.normalized_value

    @property
    def std_error(self) -> float:
        return self.estimate.normalized_std_error


@dataclass(frozen=True)
class CorrelationScan:
    preparation: str
    theta1: float
    points: tuple
    calibration: CorrelationEstimate

    @property
    def theta2(self) -> np.ndarray:
        return np.array([p.theta2 for p in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([p.std_error for p in self.points])

    def rows(self):
        """(theta2_deg, corr_normalized, std_error, n_samples) per grid point."""
        return [(pol.to_degrees(p.theta2), p.value, p.std_error, p.estimate.n_samples)
                for p in self.points]


def correlation_scan(prep, theta1, theta2_grid, n_samples: int = 100_000,
                     seed: int | PhaseProcess = 0, config: BenchConfig | None = None,
                     calibration: CorrelationEstimate | None = None,
                     stream: tuple = (SCAN_STREAM,), workers: int = 1) -> CorrelationScan:
    """Normalized correlation at each theta2, one independent phase stream per point.

    Point i draws from sub-stream ``stream + (i,)`` of the master seed, so the
    table does not depend on ``workers`` or completion order.
    """
    grid = [pol.as_setting(t).angle if isinstance(t, pol.AnalyzerSetting) else float(t)
            for t in theta2_grid]
    if not grid:
        raise ValueError("theta2 grid is empty")
    process = seed if isinstance(seed, PhaseProcess) else PhaseProcess(seed=seed)
    prep = preparation(prep)
    if calibration is None:
        calibration = calibration_estimate(prep, config, n_samples, process)

    def point(i):
        est = measure(prep, theta1, grid[i], process.with_stream(*stream, i), n_samples, config)
        return ScanPoint(grid[i], est.normalize(calibration))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = tuple(pool.map(point, range(len(grid))))
    else:
        points = tuple(point(i) for i in range(len(grid)))
    theta1 = pol.as_setting(theta1).angle if isinstance(theta1, pol.AnalyzerSetting) else float(theta1)
    return CorrelationScan(prep.state.value, theta1, points, calibration)
