"""Three-angle Bell functional F(a, b, c) = |C(a,b) - C(a,c)| - 1 - C(b,c).

Any local model with +/-1 outcomes and perfect anti-correlation at equal
settings keeps F <= 0; the singlet law -cos 2(x - y) reaches +0.5 at
a = 0, b = 30, c = 60 degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bench import BenchConfig, preparation
from .polarization import to_degrees
from .correlation import (SCAN_STREAM, CorrelationEstimate, calibration_estimate,
                          correlation_scan, measure)
from .noise import PhaseProcess

AB_STREAM = 10
AC_STREAM = 11
BC_STREAM = 12


def bell_F(c_ab, c_ac, c_bc):
    """Works elementwise on arrays."""
    return np.abs(np.asarray(c_ab) - np.asarray(c_ac)) - 1.0 - np.asarray(c_bc)


def analytic_singlet_F(a, b, c):
    def corr(x, y):
        return -np.cos(2 * (np.asarray(x) - np.asarray(y)))
    return bell_F(corr(a, b), corr(a, c), corr(b, c))


@dataclass(frozen=True)
class BellScanResult:
    a: float
    b: float
    c_grid: tuple
    F_values: tuple
    F_errors: tuple
    c_ab: float
    c_ab_error: float

    def __post_init__(self):
        if len(self.F_values) != len(self.c_grid) or len(self.F_errors) != len(self.c_grid):
            raise ValueError("F_values, F_errors and c_grid must have equal length")

    @property
    def max_F(self) -> float:
        return float(max(self.F_values))

    @property
    def argmax_c(self) -> float:
        return float(self.c_grid[int(np.argmax(self.F_values))])

    def rows(self):
        """(c_deg, F, F_err) per grid point."""
        return [(to_degrees(c), f, e) for c, f, e in zip(self.c_grid, self.F_values, self.F_errors)]

    def summary(self) -> dict:
        return {
            "a_deg": to_degrees(self.a),
            "b_deg": to_degrees(self.b),
            "c_ab": self.c_ab,
            "c_ab_error": self.c_ab_error,
            "max_F": self.max_F,
            "argmax_c_deg": to_degrees(self.argmax_c),
            "violated": self.max_F > 0.0,
            # C(a,b) enters every point, so its error is fully correlated along the curve.
            "error_model": "per-point quadrature; C(a,b) error shared by all points",
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def bell_from_estimates(a, b, c_grid, c_ab: CorrelationEstimate, c_ac, c_bc) -> BellScanResult:
    """Assemble the F curve from normalized estimates (one per grid point for ac, bc)."""
    x = c_ab.normalized_value
    ex = c_ab.normalized_std_error
    F, F_err = [], []
    for ac, bc in zip(c_ac, c_bc):
        F.append(float(bell_F(x, ac.normalized_value, bc.normalized_value)))
        F_err.append(math.sqrt(ex**2 + ac.normalized_std_error**2 + bc.normalized_std_error**2))
    return BellScanResult(float(a), float(b), tuple(float(c) for c in c_grid),
                          tuple(F), tuple(F_err), float(x), float(ex))


def violation_scan(prep, a, b, c_grid, n_samples: int = 100_000,
                   seed: int | PhaseProcess = 0, config: BenchConfig | None = None,
                   workers: int = 1) -> BellScanResult:
    """F(a, b, c) over ``c_grid`` from simulated, normalized correlations.

    C(a,b) is measured once and shared; C(a,c) and C(b,c) come from their
    own independent streams at each grid point.
    """
    c_grid = [float(c) for c in c_grid]
    if not c_grid:
        raise ValueError("c grid is empty")
    process = seed if isinstance(seed, PhaseProcess) else PhaseProcess(seed=seed)
    prep = preparation(prep)
    cal = calibration_estimate(prep, config, n_samples, process)
    c_ab = measure(prep, a, b, process.with_stream(AB_STREAM), n_samples, config).normalize(cal)
    scan_ac = correlation_scan(prep, a, c_grid, n_samples, process, config, cal,
                               stream=(SCAN_STREAM, AC_STREAM), workers=workers)
    scan_bc = correlation_scan(prep, b, c_grid, n_samples, process, config, cal,
                               stream=(SCAN_STREAM, BC_STREAM), workers=workers)
    return bell_from_estimates(a, b, c_grid, c_ab,
                               [p.estimate for p in scan_ac.points],
                               [p.estimate for p in scan_bc.points])
