"""Acceleration records, windowing, normalization, and scenario assembly.

A record is a single-channel acceleration time series; a window is one
fixed-length segment of it (default 1024 samples, one second at 1024 Hz).
Windows are the atomic unit everywhere downstream: GAN training, synthetic
generation, and classification.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from .errors import (AliasingRiskError, InsufficientDataError,
                     MissingSyntheticError, RecordParseError)

UNDAMAGED = "undamaged"
DAMAGED = "damaged"
CONDITIONS = (UNDAMAGED, DAMAGED)
PROVENANCES = ("real", "synthetic", "surrogate")

DEFAULT_WINDOW_LEN = 1024


@dataclass
class AccelRecord:
    samples: np.ndarray
    rate: float
    condition: str
    provenance: str = "real"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or len(self.samples) < 1:
            raise ValueError("record needs at least one sample in a flat array")
        if self.rate <= 0:
            raise ValueError("sampling rate must be positive")
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"provenance must be one of {PROVENANCES}")

    @property
    def duration_s(self):
        return len(self.samples) / self.rate


@dataclass
class Window:
    samples: np.ndarray
    condition: str
    provenance: str = "real"
    normalized: bool = False
    source_index: int = -1
    degenerate: bool = False

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1 or len(self.samples) < 1:
            raise ValueError("window needs a flat, non-empty sample array")
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}")

    @property
    def label(self):
        return 1 if self.condition == DAMAGED else 0


@dataclass
class ScenarioSpec:
    id: int
    train_undamaged_real: int = 60
    train_damaged_real: int = 60
    train_damaged_synth: int = 0
    test_undamaged_real: int = 15
    test_damaged_real: int = 15

    def __post_init__(self):
        if not 0 <= self.id <= 5:
            raise ValueError("scenario id must be in 0..5")
        if self.train_damaged_real + self.train_damaged_synth != self.train_undamaged_real:
            raise ValueError("training classes must balance: "
                             "damaged_real + damaged_synth = undamaged_real")
        if self.id == 0 and self.train_damaged_synth != 0:
            raise ValueError("scenario 0 is the all-real reference")


def default_scenarios():
    """Scenario 0 all-real; 1..5 with synthetic share 50, 40, 30, 20, 10."""
    synth = {0: 0, 1: 50, 2: 40, 3: 30, 4: 20, 5: 10}
    return [ScenarioSpec(id=k, train_damaged_real=60 - synth[k],
                         train_damaged_synth=synth[k]) for k in range(6)]


@dataclass
class SurrogateParams:
    natural_freq_hz: float = 120.0
    damping_ratio: float = 0.002
    damage_freq_factor: float = 0.7
    excitation_std: float = 1.0
    duration_s: float = 256.0
    rate: float = 1024.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.damping_ratio < 1.0:
            raise ValueError("damping ratio must be in (0, 1)")
        if not 0.0 < self.damage_freq_factor <= 1.0:
            raise ValueError("damage frequency factor must be in (0, 1]")
        if self.natural_freq_hz >= self.rate / 2.0:
            raise AliasingRiskError(
                f"natural frequency {self.natural_freq_hz} Hz is at or above "
                f"Nyquist ({self.rate / 2.0} Hz)")


# -- windowing and normalization ----------------------------------------

def segment_record(record, window_len=DEFAULT_WINDOW_LEN):
    """Split a record into contiguous non-overlapping windows.

    Trailing samples that do not fill a whole window are dropped.
    """
    if window_len < 1:
        raise ValueError("window length must be at least 1")
    n = len(record.samples) // window_len
    return [Window(samples=record.samples[i * window_len:(i + 1) * window_len].copy(),
                   condition=record.condition,
                   provenance=record.provenance,
                   source_index=i)
            for i in range(n)]


def normalize_windows(windows):
    """Per-window min-max map onto [-1, +1].

    Synthetic windows pass through untouched (the generator's Tanh output
    is already bounded). A constant window maps to all zeros and is
    flagged degenerate instead of raising.
    """
    out = []
    for w in windows:
        if w.provenance == "synthetic" or w.normalized:
            out.append(w)
            continue
        lo, hi = w.samples.min(), w.samples.max()
        if hi == lo:
            out.append(replace(w, samples=np.zeros_like(w.samples),
                               normalized=True, degenerate=True))
            continue
        scaled = 2.0 * (w.samples - lo) / (hi - lo) - 1.0
        out.append(replace(w, samples=scaled, normalized=True))
    return out


def shuffle_partition(windows, seed, counts):
    """Seeded shuffle, then consecutive slices of the requested sizes."""
    total = sum(counts)
    if total > len(windows):
        raise InsufficientDataError(
            f"requested {total} windows from a pool of {len(windows)}")
    perm = np.random.default_rng(seed).permutation(len(windows))
    subsets, start = [], 0
    for c in counts:
        subsets.append([windows[i] for i in perm[start:start + c]])
        start += c
    return subsets


def assemble_scenario(undamaged_pool, damaged_pool, synth_pool, spec, seed):
    """Build one scenario's (train, test) sets.

    The test slices are taken first from each shuffled pool, so with a
    fixed seed the test set is identical across all scenario specs
    regardless of their train counts.
    """
    if spec.train_damaged_synth > 0 and not synth_pool:
        raise MissingSyntheticError(
            f"scenario {spec.id} needs {spec.train_damaged_synth} synthetic windows")
    test_u, train_u = shuffle_partition(
        undamaged_pool, seed, [spec.test_undamaged_real, spec.train_undamaged_real])
    test_d, train_d = shuffle_partition(
        damaged_pool, seed + 1, [spec.test_damaged_real, spec.train_damaged_real])
    train_s = []
    if spec.train_damaged_synth > 0:
        (train_s,) = shuffle_partition(synth_pool, seed + 2, [spec.train_damaged_synth])
    train = train_u + train_d + train_s
    test = test_u + test_d
    return train, test


# -- surrogate data ------------------------------------------------------

def generate_surrogate_record(params, condition=DAMAGED):
    """Acceleration response of a damped SDOF oscillator under white noise.

    Damage is a natural-frequency drop (factor < 1), the simplest
    verifiable signature: the response spectrum peak shifts accordingly.
    The state update uses the exact zero-order-hold discretization of the
    linear system, so it is stable for any sub-Nyquist natural frequency.
    Deterministic given the seed.
    """
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}")
    f0 = params.natural_freq_hz
    if condition == DAMAGED:
        f0 *= params.damage_freq_factor
    omega = 2.0 * np.pi * f0
    zeta = params.damping_ratio
    dt = 1.0 / params.rate
    n = int(round(params.duration_s * params.rate))
    rng = np.random.default_rng(params.seed)
    force = rng.normal(0.0, params.excitation_std, size=n)
    # state [x, v], x'' = F - 2*zeta*omega*v - omega^2*x, force held per step
    a_mat = np.array([[0.0, 1.0], [-omega * omega, -2.0 * zeta * omega]])
    a_d = expm(a_mat * dt)
    b_d = np.linalg.solve(a_mat, (a_d - np.eye(2)) @ np.array([0.0, 1.0]))
    accel = np.empty(n)
    state = np.zeros(2)
    for i in range(n):
        accel[i] = force[i] - 2.0 * zeta * omega * state[1] - omega * omega * state[0]
        state = a_d @ state + b_d * force[i]
    return AccelRecord(samples=accel, rate=params.rate,
                       condition=condition, provenance="surrogate")


# -- CSV interfaces ------------------------------------------------------

RECORD_HEADER = ["t", "accel"]


def save_record(path, record):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_HEADER)
        dt = 1.0 / record.rate
        for i, v in enumerate(record.samples):
            writer.writerow([f"{i * dt:.17g}", f"{v:.17g}"])


def load_record(path, rate, condition, provenance="real"):
    """Read a `t,accel` CSV; one sample per row, in file order."""
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if line_no == 1:
                if [c.strip() for c in row] != RECORD_HEADER:
                    raise RecordParseError(path, 1, f"expected header 't,accel', got {row}")
                continue
            if not row:
                continue
            if len(row) != 2:
                raise RecordParseError(path, line_no, f"expected 2 columns, got {len(row)}")
            try:
                samples.append(float(row[1]))
            except ValueError:
                raise RecordParseError(path, line_no,
                                       f"cannot parse acceleration {row[1]!r}") from None
    if not samples:
        raise RecordParseError(path, 1, "empty record file")
    return AccelRecord(samples=np.array(samples), rate=rate,
                       condition=condition, provenance=provenance)


def save_windows(path, windows):
    """Window-set CSV: `condition,provenance,s0,...,s{L-1}`."""
    length = len(windows[0].samples)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition", "provenance"] + [f"s{i}" for i in range(length)])
        for w in windows:
            writer.writerow([w.condition, w.provenance] + [f"{v:.17g}" for v in w.samples])


def load_windows(path, normalized=True):
    windows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["condition", "provenance"]:
            raise RecordParseError(path, 1, "expected 'condition,provenance,s0,...' header")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                samples = np.array([float(v) for v in row[2:]])
            except ValueError:
                raise RecordParseError(path, line_no, "cannot parse sample value") from None
            windows.append(Window(samples=samples, condition=row[0],
                                  provenance=row[1], normalized=normalized))
    if not windows:
        raise RecordParseError(path, 1, "empty window file")
    return windows
