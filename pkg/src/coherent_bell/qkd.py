"""Ekert-style key distribution on top of the beat-signal bench.

Each round Alice (arm 1) and Bob (arm 2) pick analyzer angles at random.
A comparator turns each party's beat sample into a bit: positive -> 1,
negative -> 0, inside the dead zone -> erasure.  Only basis choices and
erasure flags cross the public channel.  Rounds whose angle pair is
perfectly (anti-)correlated become key; Bob inverts his bit on
anti-correlated pairs.  The remaining pairs feed the Bell check.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bell import BellScanResult, bell_from_estimates
from .bench import BenchConfig, preparation, simulate_beat_traces
from .correlation import calibration_estimate, estimate_correlation
from .polarization import to_degrees
from .noise import PhaseProcess, sample_phase_trace
from .quantum import BellState, bell_label, closed_form_correlation

ERASURE = -1
QKD_STREAM = 20
_DEG = math.pi / 180


def comparator_encode(sample, threshold: float = 1e-6):
    """1 above +threshold, 0 below -threshold, ERASURE in between.

    Scalars give an int; arrays give an int8 array.
    """
    x = np.asarray(sample, dtype=float)
    bits = np.where(x > threshold, 1, np.where(x < -threshold, 0, ERASURE)).astype(np.int8)
    return int(bits) if bits.ndim == 0 else bits


@dataclass(frozen=True)
class SessionConfig:
    n_rounds: int = 10_000
    alice_angles: tuple = (0.0, 30 * _DEG, 60 * _DEG)
    bob_angles: tuple = (30 * _DEG, 60 * _DEG, 90 * _DEG)
    samples_per_round: int = 1
    preparation: BellState = BellState.PSI_MINUS
    seed: int = 0
    channel_decorrelation: float = 0.0
    threshold: float = 1e-6
    bell_angles: tuple = (0.0, 30 * _DEG, 60 * _DEG)
    calibration_samples: int = 100_000

    def __post_init__(self):
        object.__setattr__(self, "preparation", bell_label(self.preparation))
        object.__setattr__(self, "alice_angles", tuple(float(a) for a in self.alice_angles))
        object.__setattr__(self, "bob_angles", tuple(float(a) for a in self.bob_angles))
        object.__setattr__(self, "bell_angles", tuple(float(a) for a in self.bell_angles))
        if not self.alice_angles or not self.bob_angles:
            raise ValueError("both parties need at least one analyzer angle")
        if self.n_rounds < 1:
            raise ValueError(f"n_rounds must be >= 1, got {self.n_rounds}")
        if self.samples_per_round < 1:
            raise ValueError("samples_per_round must be >= 1")
        if self.channel_decorrelation < 0 or self.threshold < 0:
            raise ValueError("channel_decorrelation and threshold must be >= 0")
        if len(self.bell_angles) != 3:
            raise ValueError("bell_angles must be (a, b, c)")


def key_pairs(prep, alice_angles, bob_angles, tol: float = 1e-9) -> dict:
    """Map (alice_idx, bob_idx) -> +1/-1 for pairs whose outcomes always agree/oppose."""
    out = {}
    for i, a in enumerate(alice_angles):
        for j, b in enumerate(bob_angles):
            c = float(closed_form_correlation(prep, a, b))
            if abs(abs(c) - 1.0) < tol:
                out[(i, j)] = 1 if c > 0 else -1
    return out


@dataclass(frozen=True)
class Announcement:
    sender: str
    bases: tuple
    erasures: tuple


class Party:
    """One observer: private basis choices and bits, public announcements."""

    def __init__(self, name: str, angles, rng: np.random.Generator):
        self.name = name
        self.angles = tuple(angles)
        self._rng = rng
        self.bases = None
        self.values = None
        self.bits = None

    def choose_bases(self, n_rounds: int) -> np.ndarray:
        self.bases = self._rng.integers(0, len(self.angles), size=n_rounds)
        return self.bases

    def record(self, values, threshold: float):
        self.values = np.asarray(values, dtype=float)
        self.bits = comparator_encode(self.values, threshold)

    def announce(self) -> Announcement:
        return Announcement(self.name, tuple(int(b) for b in self.bases),
                            tuple(bool(e) for e in self.bits == ERASURE))

    def sift(self, alice: Announcement, bob: Announcement, pairs: dict, invert: bool):
        """Keep own bits on key rounds neither side erased; invert where the pair anti-correlates."""
        keep, flip = [], []
        for k, (ia, ib, ea, eb) in enumerate(zip(alice.bases, bob.bases, alice.erasures, bob.erasures)):
            sign = pairs.get((ia, ib))
            if sign is not None and not ea and not eb:
                keep.append(k)
                flip.append(sign < 0)
        bits = self.bits[keep].astype(np.uint8)
        if invert:
            bits = np.where(flip, 1 - bits, bits).astype(np.uint8)
        return np.array(keep, dtype=np.int64), bits


def key_to_hex(bits) -> str:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


@dataclass(frozen=True, eq=False)
class SessionTranscript:
    config: SessionConfig
    alice_bases: np.ndarray
    bob_bases: np.ndarray
    alice_bits: np.ndarray
    bob_bits: np.ndarray
    key_rounds: np.ndarray
    alice_key: np.ndarray
    bob_key: np.ndarray
    qber: float | None
    bell_check: BellScanResult | None = None
    messages: tuple = field(default=())

    def __post_init__(self):
        if len(self.alice_key) != len(self.bob_key):
            raise ValueError("sifted keys differ in length")

    @property
    def n_sifted(self) -> int:
        return int(len(self.alice_key))

    @property
    def n_erasures(self) -> int:
        return int(np.sum((self.alice_bits == ERASURE) | (self.bob_bits == ERASURE)))

    def summary(self) -> dict:
        cfg = self.config
        out = {
            "preparation": cfg.preparation.value,
            "n_rounds": cfg.n_rounds,
            "n_sifted": self.n_sifted,
            "n_erasures": self.n_erasures,
            "qber": self.qber,
            "channel_decorrelation_deg": to_degrees(cfg.channel_decorrelation),
            "samples_per_round": cfg.samples_per_round,
            "threshold": cfg.threshold,
        }
        if self.bell_check is not None:
            out["bell_check"] = {**self.bell_check.summary(),
                                 "c_deg": to_degrees(self.bell_check.c_grid[0]),
                                 "F": self.bell_check.F_values[0],
                                 "F_err": self.bell_check.F_errors[0]}
        else:
            out["bell_check"] = None
        return out

    def to_dict(self) -> dict:
        cfg = self.config
        rounds = [
            {"k": k, "alice_basis_deg": to_degrees(cfg.alice_angles[ia]),
             "bob_basis_deg": to_degrees(cfg.bob_angles[ib]),
             "alice_bit": None if ba == ERASURE else int(ba),
             "bob_bit": None if bb == ERASURE else int(bb)}
            for k, (ia, ib, ba, bb) in enumerate(zip(self.alice_bases.tolist(), self.bob_bases.tolist(),
                                                     self.alice_bits.tolist(), self.bob_bits.tolist()))
        ]
        return {
            "summary": self.summary(),
            "alice_key_hex": key_to_hex(self.alice_key),
            "bob_key_hex": key_to_hex(self.bob_key),
            "key_bits": self.n_sifted,
            "rounds": rounds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def estimate_qber(transcript: SessionTranscript) -> float:
    """Fraction of sifted positions where Alice's and (inverted) Bob's bits differ."""
    a = np.asarray(transcript.alice_key)
    b = np.asarray(transcript.bob_key)
    if a.size == 0:
        raise ValueError("sifted key is empty")
    return float(np.mean(a != b))


def _bell_check(cfg, pairs, alice, bob, products, bench_config):
    a, b, c = cfg.bell_angles

    def index(angles, x):
        hits = [i for i, y in enumerate(angles) if math.isclose(y, x, abs_tol=1e-12)]
        return hits[0] if hits else None

    wanted = [(index(cfg.alice_angles, a), index(cfg.bob_angles, b)),
              (index(cfg.alice_angles, a), index(cfg.bob_angles, c)),
              (index(cfg.alice_angles, b), index(cfg.bob_angles, c))]
    if any(i is None or j is None for i, j in wanted):
        return None
    cal = calibration_estimate(cfg.preparation, bench_config, cfg.calibration_samples,
                               PhaseProcess(seed=cfg.seed, stream=(QKD_STREAM,)))
    estimates = []
    for i, j in wanted:
        if (i, j) in pairs:
            return None
        mask = (alice.bases == i) & (bob.bases == j)
        if mask.sum() < 2:
            return None
        estimates.append(estimate_correlation(products[mask]).normalize(cal))
    return bell_from_estimates(a, b, [c], estimates[0], [estimates[1]], [estimates[2]])


def run_session(config: SessionConfig, bench_config: BenchConfig | None = None) -> SessionTranscript:
    cfg = config
    root = PhaseProcess(seed=cfg.seed, stream=(QKD_STREAM,))
    alice = Party("alice", cfg.alice_angles, root.with_stream(1).generator())
    bob = Party("bob", cfg.bob_angles, root.with_stream(2).generator())
    alice.choose_bases(cfg.n_rounds)
    bob.choose_bases(cfg.n_rounds)

    # Source and channel: one fresh phase per sample, shared by both arms.
    m = cfg.samples_per_round
    phases = sample_phase_trace(root.with_stream(3), cfg.n_rounds * m).samples.reshape(cfg.n_rounds, m)
    jitter = root.with_stream(4).generator().normal(0.0, cfg.channel_decorrelation, size=(cfg.n_rounds, m))

    d1 = np.empty(cfg.n_rounds)
    d2 = np.empty(cfg.n_rounds)
    products = np.empty(cfg.n_rounds)
    prep = preparation(cfg.preparation)
    for i, a in enumerate(cfg.alice_angles):
        for j, b in enumerate(cfg.bob_angles):
            rounds = np.flatnonzero((alice.bases == i) & (bob.bases == j))
            if rounds.size == 0:
                continue
            t1, t2 = simulate_beat_traces(prep, a, b, phases[rounds].ravel(), bench_config,
                                          arm2_phase_jitter=jitter[rounds].ravel())
            s1 = t1.samples.reshape(-1, m)
            s2 = t2.samples.reshape(-1, m)
            d1[rounds] = s1.mean(axis=1)
            d2[rounds] = s2.mean(axis=1)
            products[rounds] = (s1 * s2).mean(axis=1)

    alice.record(d1, cfg.threshold)
    bob.record(d2, cfg.threshold)
    msg_a, msg_b = alice.announce(), bob.announce()

    pairs = key_pairs(cfg.preparation, cfg.alice_angles, cfg.bob_angles)
    key_rounds, alice_key = alice.sift(msg_a, msg_b, pairs, invert=False)
    _, bob_key = bob.sift(msg_a, msg_b, pairs, invert=True)
    qber = float(np.mean(alice_key != bob_key)) if alice_key.size else None
    bell = _bell_check(cfg, pairs, alice, bob, products, bench_config)
    return SessionTranscript(cfg, alice.bases, bob.bases, alice.bits, bob.bits,
                             key_rounds, alice_key, bob_key, qber, bell, (msg_a, msg_b))
