"""Jones-calculus primitives on the (H, V) polarization basis.

States are 2-component complex vectors and elements are 2x2 complex
matrices.  Every function that takes a state also accepts a numpy array
whose last axis has length 2, so a whole time series of fields can be
pushed through an element in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT_HALF = 1.0 / math.sqrt(2.0)

JonesMatrix = np.ndarray


@dataclass(frozen=True)
class JonesVector:
    """Complex field amplitudes along H and V."""

    h: complex
    v: complex

    def __post_init__(self):
        h, v = complex(self.h), complex(self.v)
        if not (np.isfinite(h) and np.isfinite(v)):
            raise ValueError(f"non-finite Jones vector ({h}, {v})")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_array(cls, arr) -> "JonesVector":
        arr = np.asarray(arr, dtype=complex)
        if arr.shape != (2,):
            raise ValueError(f"expected shape (2,), got {arr.shape}")
        return cls(arr[0], arr[1])

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.v], dtype=complex)

    @property
    def intensity(self) -> float:
        return abs(self.h) ** 2 + abs(self.v) ** 2

    def __add__(self, other: "JonesVector") -> "JonesVector":
        return JonesVector(self.h + other.h, self.v + other.v)

    def __sub__(self, other: "JonesVector") -> "JonesVector":
        return JonesVector(self.h - other.h, self.v - other.v)

    def __mul__(self, scalar) -> "JonesVector":
        return JonesVector(self.h * scalar, self.v * scalar)

    __rmul__ = __mul__


H = JonesVector(1, 0)
V = JonesVector(0, 1)


@dataclass(frozen=True)
class AnalyzerSetting:
    """Transmission axis of a linear analyzer, radians from H, kept in [0, pi)."""

    angle: float

    def __post_init__(self):
        angle = float(self.angle)
        if not math.isfinite(angle):
            raise ValueError(f"non-finite analyzer angle {angle}")
        angle = math.fmod(angle, math.pi)
        if angle < 0.0:
            angle += math.pi
        if angle >= math.pi:
            angle = 0.0
        object.__setattr__(self, "angle", angle)

    @classmethod
    def from_degrees(cls, degrees: float) -> "AnalyzerSetting":
        return cls(math.radians(degrees))

    @property
    def degrees(self) -> float:
        return math.degrees(self.angle)

    @property
    def unit_vector(self) -> np.ndarray:
        return np.array([math.cos(self.angle), math.sin(self.angle)])


def to_degrees(angle: float) -> float:
    """Radians to degrees, rounded to 9 decimals so grid labels print cleanly."""
    return round(math.degrees(angle), 9) + 0.0


def as_setting(theta) -> AnalyzerSetting:
    """Accept an AnalyzerSetting or a bare angle in radians."""
    if isinstance(theta, AnalyzerSetting):
        return theta
    return AnalyzerSetting(theta)


def _as_field(state):
    if isinstance(state, JonesVector):
        return state.as_array(), True
    arr = np.asarray(state, dtype=complex)
    if arr.shape[-1] != 2:
        raise ValueError(f"last axis must have length 2, got shape {arr.shape}")
    return arr, False


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def retarder(fast_axis: float, retardance: float) -> JonesMatrix:
    """Linear retarder with the given fast-axis angle and phase retardance.

    The slow axis picks up ``exp(+i*retardance)``; the overall phase is
    then removed symmetrically so the matrix has determinant 1.
    """
    core = np.diag([1.0, np.exp(1j * retardance)]).astype(complex)
    m = rotation(fast_axis) @ core @ rotation(-fast_axis)
    return np.exp(-0.5j * retardance) * m


def quarter_wave_plate(fast_axis: float) -> JonesMatrix:
    """QWP at ``fast_axis``.  At +pi/4 this is (1/sqrt2)[[1, -i], [-i, 1]]."""
    return retarder(fast_axis, math.pi / 2)


def half_wave_plate(fast_axis: float) -> JonesMatrix:
    """HWP at ``fast_axis``: the real reflection [[cos2a, sin2a], [sin2a, -cos2a]].

    This equals ``i * retarder(fast_axis, pi)``; the global phase is chosen
    so that HWP(0) = diag(1, -1).
    """
    c, s = math.cos(2 * fast_axis), math.sin(2 * fast_axis)
    return np.array([[c, s], [s, -c]], dtype=complex)


def phase_shifter(h_phase, v_phase=0.0):
    """Polarization-dependent phase delay diag(exp(-i*h_phase), exp(-i*v_phase)).

    ``h_phase`` may be an array, giving one matrix per sample with shape (n, 2, 2).
    """
    h_phase = np.asarray(h_phase, dtype=float)
    out = np.zeros(h_phase.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-1j * h_phase)
    out[..., 1, 1] = np.exp(-1j * np.asarray(v_phase, dtype=float))
    return out


def apply(matrix, state):
    """Apply a Jones matrix (or a stack of them) to a state or a stack of states."""
    arr, scalar = _as_field(state)
    matrix = np.asarray(matrix, dtype=complex)
    out = np.einsum("...ij,...j->...i", matrix, arr)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("element application produced non-finite field")
    return JonesVector.from_array(out) if scalar else out


def beam_splitter(in1, in2):
    """Lossless 50/50 splitter: out1 = (in1 + in2)/sqrt2, out2 = (in1 - in2)/sqrt2.

    The minus sign on the second port is the splitter's pi phase shift; it
    acts identically on both polarization components.
    """
    a, scalar_a = _as_field(in1)
    b, scalar_b = _as_field(in2)
    out1 = (a + b) * SQRT_HALF
    out2 = (a - b) * SQRT_HALF
    if scalar_a and scalar_b:
        return JonesVector.from_array(out1), JonesVector.from_array(out2)
    return out1, out2


def analyzer_amplitude(state, setting):
    """Field amplitude transmitted along the analyzer axis: cos(t)*h + sin(t)*v."""
    arr, scalar = _as_field(state)
    theta = as_setting(setting).angle
    amp = math.cos(theta) * arr[..., 0] + math.sin(theta) * arr[..., 1]
    return complex(amp) if scalar else amp


def is_unitary(matrix, atol: float = 1e-12) -> bool:
    m = np.asarray(matrix, dtype=complex)
    return np.allclose(m.conj().T @ m, np.eye(2), rtol=0.0, atol=atol)


def equal_up_to_global_phase(a, b, atol: float = 1e-12) -> bool:
    """True when ``a = exp(i*g) * b`` for some real g (vectors or matrices)."""
    a = np.asarray(a.as_array() if isinstance(a, JonesVector) else a, dtype=complex).ravel()
    b = np.asarray(b.as_array() if isinstance(b, JonesVector) else b, dtype=complex).ravel()
    k = int(np.argmax(np.abs(b)))
    if abs(b[k]) < atol:
        return bool(np.allclose(a, 0.0, atol=atol))
    phase = a[k] / b[k]
    if abs(abs(phase) - 1.0) > atol * 10:
        return False
    return bool(np.allclose(a, phase * b, rtol=0.0, atol=atol))
