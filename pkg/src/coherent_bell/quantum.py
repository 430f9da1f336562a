"""Analytic quantum reference: projection states, analyzer operators and
two-photon Bell-state correlations on the (H, V) basis."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .polarization import as_setting


class BellState(str, enum.Enum):
    PSI_MINUS = "psi-minus"
    PSI_PLUS = "psi-plus"
    PHI_PLUS = "phi-plus"
    PHI_MINUS = "phi-minus"


def bell_label(state) -> BellState:
    """Resolve a BellState from an enum member, value string or member name."""
    if isinstance(state, BellState):
        return state
    label = getattr(state, "state", state)
    if isinstance(label, BellState):
        return label
    text = str(label).strip().lower().replace("_", "-")
    try:
        return BellState(text)
    except ValueError:
        raise ValueError(f"unknown Bell state {state!r}; choose from "
                         f"{', '.join(s.value for s in BellState)}") from None


def projection_state(theta) -> np.ndarray:
    """|theta> = cos(theta)|H> + sin(theta)|V>."""
    t = as_setting(theta).angle
    return np.array([math.cos(t), math.sin(t)], dtype=complex)


def orthogonal_state(theta) -> np.ndarray:
    """|theta_perp> = -sin(theta)|H> + cos(theta)|V>."""
    t = as_setting(theta).angle
    return np.array([-math.sin(t), math.cos(t)], dtype=complex)


def analyzer_operator(theta) -> np.ndarray:
    """A(theta) = |t><t| - |t_perp><t_perp|: +1 when transmitted, -1 when rejected."""
    par = projection_state(theta)
    perp = orthogonal_state(theta)
    return np.outer(par, par.conj()) - np.outer(perp, perp.conj())


# Basis order for two-photon amplitudes: HH, HV, VH, VV (photon 1 first).
_BELL_AMPLITUDES = {
    BellState.PSI_MINUS: (0.0, 1.0, -1.0, 0.0),
    BellState.PSI_PLUS: (0.0, 1.0, 1.0, 0.0),
    BellState.PHI_PLUS: (1.0, 0.0, 0.0, 1.0),
    BellState.PHI_MINUS: (1.0, 0.0, 0.0, -1.0),
}


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    amplitudes: np.ndarray
    label: BellState | None = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes (HH, HV, VH, VV), got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def bell_state(label) -> TwoPhotonState:
    label = bell_label(label)
    amps = np.array(_BELL_AMPLITUDES[label], dtype=complex) / math.sqrt(2.0)
    return TwoPhotonState(amps, label)


def quantum_correlation(state, theta1, theta2) -> float:
    """<state| A(theta1) (x) A(theta2) |state> by explicit 4x4 contraction."""
    if not isinstance(state, TwoPhotonState):
        state = bell_state(state)
    if abs(state.norm - 1.0) > 1e-12:
        raise ValueError(f"state is not normalized (norm {state.norm!r})")
    op = np.kron(analyzer_operator(theta1), analyzer_operator(theta2))
    psi = state.amplitudes
    return float(np.real(psi.conj() @ op @ psi))


def closed_form_correlation(label, theta1, theta2):
    """-cos2(t1 -/+ t2) for psi-/psi+, +cos2(t1 -/+ t2) for phi+/phi-.

    Works on arrays; the angles are plain radians here.
    """
    label = bell_label(label)
    t1 = np.asarray(theta1, dtype=float)
    t2 = np.asarray(theta2, dtype=float)
    if label is BellState.PSI_MINUS:
        return -np.cos(2 * (t1 - t2))
    if label is BellState.PSI_PLUS:
        return -np.cos(2 * (t1 + t2))
    if label is BellState.PHI_PLUS:
        return np.cos(2 * (t1 - t2))
    return np.cos(2 * (t1 + t2))
