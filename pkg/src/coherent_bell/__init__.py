"""Simulator of polarization-style nonlocal correlations built from a coherent
signal field and a phase-noise field split between two observers."""

__version__ = "0.1.0"

from .bell import BellScanResult, bell_F, violation_scan
from .bench import (BeatTrace, BellPreparation, BenchConfig, analytic_beat, decompose_beat,
                    preparation, simulate_beat_traces)
from .correlation import (CorrelationEstimate, calibrate, correlation_scan, estimate_correlation,
                          multiply_traces)
from .noise import PhaseModel, PhaseProcess, PhaseTrace, empirical_phase_uniformity, sample_phase_trace
from .polarization import (AnalyzerSetting, JonesVector, analyzer_amplitude, beam_splitter,
                           half_wave_plate, quarter_wave_plate)
from .qkd import SessionConfig, SessionTranscript, comparator_encode, estimate_qber, run_session
from .quantum import BellState, analyzer_operator, bell_state, quantum_correlation
