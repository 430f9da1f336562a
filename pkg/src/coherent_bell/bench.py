"""The two-observer bench.

A vertically polarized signal field and a horizontally polarized noise
field with random phase phi meet on a 50/50 splitter.  Each output arm
passes its wave plates and an analyzer before a square-law detector whose
DC level is removed, leaving the beat term.  With the default detector
gain the beat amplitude is K = signal_amplitude * noise_amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import polarization as pol
from .noise import PhaseTrace
from .quantum import BellState, bell_label


@dataclass(frozen=True)
class WavePlate:
    kind: str  # "qwp" or "hwp"
    fast_axis: float

    def matrix(self) -> np.ndarray:
        if self.kind == "qwp":
            return pol.quarter_wave_plate(self.fast_axis)
        if self.kind == "hwp":
            return pol.half_wave_plate(self.fast_axis)
        raise ValueError(f"unknown plate kind {self.kind!r}")

    def __str__(self):
        return f"{self.kind.upper()}({math.degrees(self.fast_axis):+g} deg)"


QWP_P45 = WavePlate("qwp", math.pi / 4)
QWP_M45 = WavePlate("qwp", -math.pi / 4)
HWP_0 = WavePlate("hwp", 0.0)


@dataclass(frozen=True)
class BellPreparation:
    """Plates in each arm, listed in the order the light meets them."""

    state: BellState
    arm1: tuple
    arm2: tuple
    # arm-2 beat is arm2_sign * sin(2*theta2 + arm2_phase_sign * phi)
    arm2_sign: int
    arm2_phase_sign: int

    def describe(self) -> str:
        a1 = ", ".join(map(str, self.arm1))
        a2 = ", ".join(map(str, self.arm2))
        return f"{self.state.value}: arm1 [{a1}] arm2 [{a2}]"


# The HWP sits between the splitter and the QWP with its fast axis on H,
# where it cancels the splitter's pi phase on the noise field.
PREPARATIONS = {
    BellState.PSI_MINUS: BellPreparation(BellState.PSI_MINUS, (QWP_P45,), (QWP_P45,), -1, +1),
    BellState.PSI_PLUS: BellPreparation(BellState.PSI_PLUS, (QWP_P45,), (HWP_0, QWP_M45), +1, -1),
    BellState.PHI_PLUS: BellPreparation(BellState.PHI_PLUS, (QWP_P45,), (HWP_0, QWP_P45), +1, +1),
    BellState.PHI_MINUS: BellPreparation(BellState.PHI_MINUS, (QWP_P45,), (QWP_M45,), -1, -1),
}


def preparation(prep) -> BellPreparation:
    if isinstance(prep, BellPreparation):
        return prep
    return PREPARATIONS[bell_label(prep)]


@dataclass(frozen=True)
class BenchConfig:
    optical_frequency: float = 2 * math.pi * 4.74e14  # rad/s, bookkeeping only
    modulation_frequency: float = 2 * math.pi * 110e6  # rad/s, bookkeeping only
    signal_amplitude: float = 1.0
    noise_amplitude: float = 1.0
    detector_gain: float = 2.0
    dt: float = 1.0
    dc_block: str = "analytic"  # or "running_mean"
    dc_window: int = 1001

    def __post_init__(self):
        if not (self.signal_amplitude > 0 and self.noise_amplitude > 0):
            raise ValueError("field amplitudes must be positive")
        if not self.detector_gain > 0:
            raise ValueError("detector_gain must be positive")
        if self.dc_block not in ("analytic", "running_mean"):
            raise ValueError(f"dc_block must be 'analytic' or 'running_mean', got {self.dc_block!r}")
        if self.dc_window < 1:
            raise ValueError("dc_window must be >= 1")

    @property
    def beat_amplitude(self) -> float:
        """K: peak of the DC-blocked beat for the circular states the QWPs produce."""
        return 0.5 * self.detector_gain * self.signal_amplitude * self.noise_amplitude


@dataclass(frozen=True, eq=False)
class BeatTrace:
    samples: np.ndarray
    dt: float = 1.0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("a beat trace needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("beat trace contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size


def _running_mean(x: np.ndarray, window: int) -> np.ndarray:
    window = min(window, x.size)
    c = np.concatenate(([0.0], np.cumsum(x)))
    lo = np.clip(np.arange(x.size) - window // 2, 0, x.size - window)
    return (c[lo + window] - c[lo]) / window


def _detect(field_arr, fixed_parts, theta, config):
    """Square-law detection of one arm followed by the DC block."""
    amp = pol.analyzer_amplitude(field_arr, theta)
    intensity = np.abs(amp) ** 2
    if config.dc_block == "analytic":
        dc = sum(abs(pol.analyzer_amplitude(p, theta)) ** 2 for p in fixed_parts)
    else:
        dc = _running_mean(intensity, config.dc_window)
    return config.detector_gain * (intensity - dc)


def _through(plates, state):
    for plate in plates:
        state = pol.apply(plate.matrix(), state)
    return state


def simulate_beat_traces(prep, theta1, theta2, phases: PhaseTrace,
                         config: BenchConfig | None = None, arm2_phase_jitter=None):
    """Full-field simulation of both detectors for every phase sample.

    ``arm2_phase_jitter`` adds a per-sample birefringent phase on the H
    component of arm 2 (a channel fluctuation between the observers).
    """
    config = config or BenchConfig()
    prep = preparation(prep)
    theta1, theta2 = pol.as_setting(theta1), pol.as_setting(theta2)
    if not isinstance(phases, PhaseTrace):
        phases = PhaseTrace(phases)
    phi = phases.samples

    # Both fields share the (omega + Omega) carrier, which drops out of |E|^2.
    noise_unit = np.array([config.noise_amplitude, 0.0], dtype=complex)
    signal_unit = np.array([0.0, config.signal_amplitude], dtype=complex)
    noise_in = np.zeros((phi.size, 2), dtype=complex)
    noise_in[:, 0] = config.noise_amplitude * np.exp(-1j * phi)
    signal_in = np.broadcast_to(signal_unit, noise_in.shape)

    out1, out2 = pol.beam_splitter(signal_in, noise_in)
    fixed1 = (pol.beam_splitter(signal_unit, 0 * noise_unit)[0],
              pol.beam_splitter(0 * signal_unit, noise_unit)[0])
    fixed2 = (pol.beam_splitter(signal_unit, 0 * noise_unit)[1],
              pol.beam_splitter(0 * signal_unit, noise_unit)[1])
    if arm2_phase_jitter is not None:
        jitter = np.broadcast_to(np.asarray(arm2_phase_jitter, dtype=float), phi.shape)
        out2 = pol.apply(pol.phase_shifter(jitter), out2)

    f1 = _through(prep.arm1, out1)
    f2 = _through(prep.arm2, out2)
    fixed1 = [_through(prep.arm1, p) for p in fixed1]
    fixed2 = [_through(prep.arm2, p) for p in fixed2]

    d1 = _detect(f1, fixed1, theta1, config)
    d2 = _detect(f2, fixed2, theta2, config)
    seed = phases.process.seed if phases.process is not None else None
    common = {"preparation": prep.state.value, "seed": seed}
    return (BeatTrace(d1, config.dt, {**common, "arm": 1, "theta": theta1.angle}),
            BeatTrace(d2, config.dt, {**common, "arm": 2, "theta": theta2.angle}))


def analytic_beat(prep, theta, phi, arm: int, amplitude: float = 1.0):
    """Closed-form detector output for one arm (K = ``amplitude``)."""
    prep = preparation(prep)
    t = pol.as_setting(theta).angle
    phi = np.asarray(phi, dtype=float)
    if arm == 1:
        return amplitude * np.sin(2 * t + phi)
    if arm == 2:
        return amplitude * prep.arm2_sign * np.sin(2 * t + prep.arm2_phase_sign * phi)
    raise ValueError(f"arm must be 1 or 2, got {arm!r}")


def decompose_beat(trace: BeatTrace, phases: PhaseTrace):
    """Least-squares weights of sin(phi) and cos(phi) in a beat trace.

    For arm 1 the weights come out as K*(cos 2theta, sin 2theta).
    """
    samples = trace.samples if isinstance(trace, BeatTrace) else np.asarray(trace, dtype=float)
    phi = phases.samples if isinstance(phases, PhaseTrace) else np.asarray(phases, dtype=float)
    if samples.shape != phi.shape:
        raise ValueError(f"trace length {samples.size} != phase length {phi.size}")
    design = np.column_stack((np.sin(phi), np.cos(phi)))
    (w_sin, w_cos), *_ = np.linalg.lstsq(design, samples, rcond=None)
    return float(w_sin), float(w_cos)
