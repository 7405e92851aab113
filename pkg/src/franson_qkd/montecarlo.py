"""Event-level Monte Carlo of a key distribution session.

One trial is one photon detected by Alice, which is also one double gate
at Bob.  Bob's detector-bins are indexed ``(basis, detector)``: the
polarizing splitter turns the basis into a 200 ns time bin and the output
port of the interferometer into the bit value.

Gates are simulated in fixed-size chunks.  Chunk ``c`` of a session seeded
with ``s`` draws from its own counter-based Philox stream keyed by
``SeedSequence(s, spawn_key=(c,))``, so the statistics do not depend on the
order (or the process) in which chunks are evaluated.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum, IntEnum
from typing import Sequence

import numpy as np

from .detection import ClickPattern
from .errors import ConfigError
from .interference import PhaseSetting, outcome_probs_with_visibility
from .qber_model import LinkBudget, qber_breakdown

DEFAULT_CHUNK = 1 << 16


class Origin(IntEnum):
    SIGNAL = 0
    SIDE_PEAK = 1
    ACCIDENTAL = 2
    DARK = 3


class Resolution(str, Enum):
    NO_CLICK = "no_click"
    SINGLE = "single"
    MULTI_RANDOM = "multi_random"


class PeakClass(str, Enum):
    INTERFERING = "interfering"
    EARLY = "early"
    LATE = "late"
    ACCIDENTAL = "accidental"
    NONE = "none"


@dataclass(frozen=True)
class SimulationConfig:
    budget: LinkBudget
    bob_efficiency: tuple[float, float] | None = None
    bob_dark: tuple[float, float] | None = None
    alice_double_prob: float = 0.0
    alice_dead_time: float = 500.0  # ns
    drift_amplitude: float = 0.0  # rad
    drift_period: float = 0.0  # gates
    verification: bool = False
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        b = self.budget
        if self.bob_efficiency is None:
            object.__setattr__(self, "bob_efficiency", (b.eta_d, b.eta_d))
        if self.bob_dark is None:
            object.__setattr__(self, "bob_dark", (b.p_cs, b.p_cs))
        self.validate()

    def validate(self) -> None:
        for p in (*self.bob_efficiency, *self.bob_dark, self.alice_double_prob):
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"probability out of range: {p!r}")
        if self.alice_dead_time * 1e-9 * self.budget.source.f_alice >= 1.0:
            raise ConfigError("f_alice exceeds the rate allowed by Alice's dead time")
        if self.drift_amplitude and not self.drift_period > 0:
            raise ConfigError("phase drift needs a positive period")
        if self.chunk_size < 1:
            raise ConfigError("chunk size must be >= 1")

    def drift(self, gate_index):
        if not self.drift_amplitude:
            return np.zeros_like(np.asarray(gate_index, dtype=float))
        return self.drift_amplitude * np.sin(2 * np.pi * np.asarray(gate_index, dtype=float) / self.drift_period)


def _as_config(obj) -> SimulationConfig:
    if isinstance(obj, SimulationConfig):
        return obj
    if isinstance(obj, LinkBudget):
        return SimulationConfig(obj)
    raise ConfigError(f"expected a LinkBudget or SimulationConfig, got {type(obj).__name__}")


# -- single gate -------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalMessage:
    """Timing pulse sent by Alice; ``detector_id`` only in verification mode."""

    timestamp: int
    detector_id: int | None = None


@dataclass(frozen=True)
class GateRecord:
    gate_index: int
    alice_basis: int
    alice_bit: int
    pair_present: bool
    peak_class: PeakClass
    bob_clicks: ClickPattern
    bob_result: tuple[int, int] | None
    resolution: Resolution
    message: ClassicalMessage
    origin: Origin | None = None


def alice_double_detection_policy(clicks: Sequence[tuple[int, int]], rng: np.random.Generator) -> tuple[int, int]:
    """Turn Alice's clicks in one window into a single (basis, bit).

    Several clicks are never discarded: the bit is drawn at random, and so is
    the basis unless every click agrees on it.
    """
    clicks = list(clicks)
    if not clicks:
        raise ValueError("Alice registered no click")
    if len(clicks) == 1:
        return clicks[0]
    bases = {b for b, _ in clicks}
    basis = bases.pop() if len(bases) == 1 else int(rng.integers(2))
    return basis, int(rng.integers(2))


def _bob_bit(alice_basis, alice_bit, bob_basis, visibility, drift, u):
    setting = PhaseSetting(phi_a=drift, basis_a=alice_basis, basis_b=bob_basis)
    p_anti = outcome_probs_with_visibility(setting, visibility)[1]
    return alice_bit ^ int(u < p_anti)


def simulate_gate(config, rng: np.random.Generator, gate_index: int = 0) -> GateRecord:
    """Follow one Alice detection through source, channel and Bob's gates."""
    cfg = _as_config(config)
    b = cfg.budget
    T = b.T_L * b.T_B
    port = int(rng.integers(4))
    a_basis, a_bit = port >> 1, port & 1
    drift = float(cfg.drift(gate_index))

    arrivals: list[tuple[int, int, Origin]] = []  # (basis, bit, origin) of photons in the window

    pair_present = bool(rng.random() < b.source.mu)
    peak = PeakClass.NONE
    if pair_present:
        if rng.random() < b.q_interf:
            peak = PeakClass.INTERFERING
        else:
            peak = PeakClass.EARLY if rng.random() < 0.5 else PeakClass.LATE
        if rng.random() < T:
            basis = int(rng.integers(2))
            if peak is PeakClass.INTERFERING:
                bit = _bob_bit(a_basis, a_bit, basis, b.visibility, drift, rng.random())
                arrivals.append((basis, bit, Origin.SIGNAL))
            elif rng.random() < b.side_leak:
                arrivals.append((basis, int(rng.integers(2)), Origin.SIDE_PEAK))
    if rng.random() < b.source.nu:
        if peak is PeakClass.NONE:
            peak = PeakClass.ACCIDENTAL
        if rng.random() < T and rng.random() < b.q_interf:
            arrivals.append((int(rng.integers(2)), int(rng.integers(2)), Origin.ACCIDENTAL))

    flags = np.zeros((2, 2), dtype=bool)
    origins: dict[tuple[int, int], Origin] = {}
    for basis, bit, origin in arrivals:
        if rng.random() < cfg.bob_efficiency[bit]:
            flags[basis, bit] = True
            origins.setdefault((basis, bit), origin)
    dark = rng.random((2, 2)) < np.array([cfg.bob_dark, cfg.bob_dark])
    for basis, det in np.argwhere(dark & ~flags):
        origins[(int(basis), int(det))] = Origin.DARK
    flags |= dark

    pattern = ClickPattern(flags)
    clicks = pattern.clicks()
    if not clicks:
        result, resolution, origin = None, Resolution.NO_CLICK, None
    elif len(clicks) == 1:
        result, resolution = clicks[0], Resolution.SINGLE
        origin = origins[result]
    else:
        result, resolution = clicks[int(rng.integers(len(clicks)))], Resolution.MULTI_RANDOM
        origin = origins[result]

    if cfg.alice_double_prob and rng.random() < cfg.alice_double_prob:
        other = (port + int(rng.integers(1, 4))) % 4
        a_basis, a_bit = alice_double_detection_policy([(a_basis, a_bit), (other >> 1, other & 1)], rng)

    message = ClassicalMessage(gate_index, port if cfg.verification else None)
    return GateRecord(gate_index, a_basis, a_bit, pair_present, peak, pattern, result, resolution, message, origin)


# -- vectorized chunks -------------------------------------------------------

_COLUMNS = ("gate", "alice_basis", "alice_bit", "alice_port", "bob_basis", "bob_bit", "n_clicks", "origin")
_DTYPES = (np.int64, np.uint8, np.uint8, np.uint8, np.uint8, np.uint8, np.uint8, np.uint8)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def simulate_chunk(cfg: SimulationConfig, rng: np.random.Generator, start: int, n: int) -> dict[str, np.ndarray]:
    """Simulate gates ``start .. start+n-1``; returns columns for gates with a click."""
    b = cfg.budget
    p_int, p_side, p_acc = b.p_arrival_interfering, b.p_arrival_side, b.p_arrival_accidental

    # draw order is part of the determinism contract
    u = rng.random(n)
    sig = np.flatnonzero(u < p_int)
    side = np.flatnonzero((u >= p_int) & (u < p_int + p_side))
    acc = np.flatnonzero(rng.random(n) < p_acc)
    dark = []
    for basis in (0, 1):
        for det in (0, 1):
            k = int(rng.binomial(n, cfg.bob_dark[det]))
            pos = rng.choice(n, size=k, replace=False) if k else np.empty(0, dtype=np.int64)
            dark.append((basis, det, np.sort(pos)))

    cand = np.unique(np.concatenate([sig, side, acc] + [d[2] for d in dark]))
    port = rng.integers(0, 4, size=cand.size).astype(np.uint8)
    a_basis, a_bit = port >> 1, port & 1

    eff = np.asarray(cfg.bob_efficiency)

    # interfering photons: fringe probability from the phase sum
    ci = np.searchsorted(cand, sig)
    s_basis = rng.integers(0, 2, size=sig.size)
    phase = (a_basis[ci].astype(float) - s_basis) * (np.pi / 2) + cfg.drift(start + sig)
    p_anti = 0.5 * (1.0 - b.visibility * np.cos(phase))
    s_bit = a_bit[ci] ^ (rng.random(sig.size) < p_anti)
    s_hit = rng.random(sig.size) < eff[s_bit]

    def uniform_photons(idx):
        basis = rng.integers(0, 2, size=idx.size)
        bit = rng.integers(0, 2, size=idx.size)
        hit = rng.random(idx.size) < eff[bit]
        return idx[hit], basis[hit], bit[hit]

    side_g, side_b, side_d = uniform_photons(side)
    acc_g, acc_b, acc_d = uniform_photons(acc)

    gate = [sig[s_hit], side_g, acc_g] + [d[2] for d in dark]
    bbin = [s_basis[s_hit], side_b, acc_b] + [np.full(d[2].size, d[0]) for d in dark]
    bdet = [s_bit[s_hit], side_d, acc_d] + [np.full(d[2].size, d[1]) for d in dark]
    orig = [np.full(g.size, o) for g, o in zip(gate[:3], (Origin.SIGNAL, Origin.SIDE_PEAK, Origin.ACCIDENTAL))]
    orig += [np.full(d[2].size, Origin.DARK) for d in dark]
    gate = np.concatenate(gate).astype(np.int64)
    bbin = np.concatenate(bbin).astype(np.int64)
    bdet = np.concatenate(bdet).astype(np.int64)
    orig = np.concatenate(orig).astype(np.int64)

    # a detector-bin fires once even if several photons hit it; keep the first cause
    slot = gate * 4 + bbin * 2 + bdet
    _, first = np.unique(slot, return_index=True)
    first.sort()
    gate, bbin, bdet, orig = gate[first], bbin[first], bdet[first], orig[first]

    # several fired bins: pick one uniformly
    key = rng.random(gate.size)
    order = np.lexsort((key, gate))
    gate, bbin, bdet, orig = gate[order], bbin[order], bdet[order], orig[order]
    heads = np.flatnonzero(np.r_[True, gate[1:] != gate[:-1]]) if gate.size else np.empty(0, dtype=np.int64)
    counts = np.diff(np.r_[heads, gate.size])
    gate, bbin, bdet, orig = gate[heads], bbin[heads], bdet[heads], orig[heads]

    ai = np.searchsorted(cand, gate)
    rec_basis, rec_bit = a_basis[ai].copy(), a_bit[ai].copy()
    if cfg.alice_double_prob:
        dd = rng.random(gate.size) < cfg.alice_double_prob
        other = (port[ai] + rng.integers(1, 4, size=gate.size)) % 4
        same = (other >> 1) == rec_basis
        rand_basis = rng.integers(0, 2, size=gate.size)
        rand_bit = rng.integers(0, 2, size=gate.size)
        rec_basis = np.where(dd & ~same, rand_basis, rec_basis)
        rec_bit = np.where(dd, rand_bit, rec_bit)

    values = (start + gate, rec_basis, rec_bit, port[ai], bbin, bdet, counts, orig)
    return {name: np.asarray(v, dtype=dt) for name, v, dt in zip(_COLUMNS, values, _DTYPES)}


# -- sessions ----------------------------------------------------------------


@dataclass
class Transcript:
    """Every gate at which Bob obtained a result."""

    columns: dict[str, np.ndarray]
    n_gates: int
    f_alice: float
    verification: bool = False

    def __len__(self) -> int:
        return int(self.columns["gate"].size)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def sifted_mask(self) -> np.ndarray:
        return self["alice_basis"] == self["bob_basis"]

    def messages(self) -> list[ClassicalMessage]:
        ids = self["alice_port"] if self.verification else [None] * len(self)
        return [ClassicalMessage(int(g), None if d is None else int(d)) for g, d in zip(self["gate"], ids)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["gate_index", "alice_basis", "alice_bit", "bob_basis", "bob_bit", "resolution"]
        if self.verification:
            header.append("detector_id")
        writer.writerow(header)
        res = np.where(self["n_clicks"] > 1, Resolution.MULTI_RANDOM.value, Resolution.SINGLE.value)
        cols = [self[c] for c in ("gate", "alice_basis", "alice_bit", "bob_basis", "bob_bit")]
        for i in range(len(self)):
            row = [int(c[i]) for c in cols] + [res[i]]
            if self.verification:
                row.append(int(self["alice_port"][i]))
            writer.writerow(row)
        return buf.getvalue()


@dataclass(frozen=True)
class SiftedKey:
    alice: np.ndarray
    bob: np.ndarray
    gate_index: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.alice.size)

    @property
    def errors(self) -> int:
        return int(np.count_nonzero(self.alice != self.bob))


def sift(records) -> SiftedKey:
    """Keep the gates where Bob has a result in the basis Alice used."""
    if isinstance(records, Transcript):
        m = records.sifted_mask
        return SiftedKey(records["alice_bit"][m].copy(), records["bob_bit"][m].copy(), records["gate"][m].copy())
    kept = [r for r in records if r.bob_result is not None and r.bob_result[0] == r.alice_basis]
    return SiftedKey(
        np.array([r.alice_bit for r in kept], dtype=np.uint8),
        np.array([r.bob_result[1] for r in kept], dtype=np.uint8),
        np.array([r.gate_index for r in kept], dtype=np.int64),
    )


def simulate_session(config, seed: int, n_gates: int, workers: int = 1) -> Transcript:
    cfg = _as_config(config)
    if int(n_gates) != n_gates or n_gates < 1:
        raise ConfigError(f"n_gates must be a positive integer, got {n_gates!r}")
    n_gates = int(n_gates)
    size = cfg.chunk_size
    starts = list(range(0, n_gates, size))

    def job(c):
        start = starts[c]
        return simulate_chunk(cfg, chunk_rng(seed, c), start, min(size, n_gates - start))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, range(len(starts))))
    else:
        parts = [job(c) for c in range(len(starts))]
    columns = {name: np.concatenate([p[name] for p in parts]) for name in _COLUMNS}
    return Transcript(columns, n_gates, cfg.budget.source.f_alice, cfg.verification)


@dataclass(frozen=True)
class SessionStats:
    gates: int
    detected: int
    sifted_bits: int
    errors: int
    measured_qber: float
    raw_rate: float  # Hz, all sifted counts
    signal_rate: float  # Hz, sifted counts caused by the partner photon
    multi_clicks: int
    sifted_by_origin: dict[str, int] = field(default_factory=dict)
    errors_by_origin: dict[str, int] = field(default_factory=dict)
    errors_by_basis: tuple[int, int] = (0, 0)

    @property
    def errors_dark(self) -> int:
        return self.errors_by_origin.get("dark", 0)

    @property
    def errors_optical(self) -> int:
        return self.errors_by_origin.get("signal", 0)

    @property
    def errors_accidental(self) -> int:
        return self.errors_by_origin.get("accidental", 0) + self.errors_by_origin.get("side_peak", 0)

    @property
    def qber_sigma(self) -> float:
        q = self.measured_qber
        return math.sqrt(q * (1 - q) / self.sifted_bits) if self.sifted_bits else float("nan")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["errors_by_basis"] = list(self.errors_by_basis)
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def summarize(t: Transcript) -> SessionStats:
    m = t.sifted_mask
    err = m & (t["alice_bit"] != t["bob_bit"])
    sifted, errors = int(m.sum()), int(err.sum())
    origin = t["origin"]
    names = {o: o.name.lower() for o in Origin}
    sifted_by = {names[o]: int(np.count_nonzero(m & (origin == o))) for o in Origin}
    errors_by = {names[o]: int(np.count_nonzero(err & (origin == o))) for o in Origin}
    by_basis = tuple(int(np.count_nonzero(err & (t["alice_basis"] == k))) for k in (0, 1))
    scale = t.f_alice / t.n_gates
    return SessionStats(
        gates=t.n_gates,
        detected=len(t),
        sifted_bits=sifted,
        errors=errors,
        measured_qber=errors / sifted if sifted else 0.0,
        raw_rate=scale * sifted,
        signal_rate=scale * sifted_by["signal"],
        multi_clicks=int(np.count_nonzero(t["n_clicks"] > 1)),
        sifted_by_origin=sifted_by,
        errors_by_origin=errors_by,
        errors_by_basis=by_basis,
    )


def run_session(config, seed: int, n_gates: int, workers: int = 1) -> SessionStats:
    return summarize(simulate_session(config, seed, n_gates, workers))


def analytic_comparison(config, stats: SessionStats) -> dict:
    """Side-by-side of measured statistics and the closed-form model."""
    cfg = _as_config(config)
    br = qber_breakdown(cfg.budget)
    sigma_q = math.sqrt(br.counted * (1 - br.counted) / max(stats.sifted_bits, 1))
    n = stats.gates
    rate_sigma = br.f_alice / n * math.sqrt(n * br.p_correct * (1 - br.p_correct))
    return {
        "analytic_total": br.total,
        "analytic_counted": br.counted,
        "measured_qber": stats.measured_qber,
        "qber_z": (stats.measured_qber - br.counted) / sigma_q,
        "analytic_raw_rate_hz": br.raw_rate,
        "measured_signal_rate_hz": stats.signal_rate,
        "rate_z": (stats.signal_rate - br.raw_rate) / rate_sigma,
        "analytic_sifted_rate_hz": br.sifted_rate,
        "measured_raw_rate_hz": stats.raw_rate,
    }
