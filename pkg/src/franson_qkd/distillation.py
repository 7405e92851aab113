"""From sifted key to secret key: sampling, Cascade, Toeplitz hashing."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve
from scipy.stats import binomtest

from .errors import DomainError, ReconciliationError
from .montecarlo import SiftedKey

# (1 + f) h(q) is disclosed by EC + PA; f frozen from 450 Hz @ 5.9% -> 178 Hz
CALIBRATED_EC_INEFFICIENCY = 0.8686696735422104
VERIFY_BITS = 64


def binary_entropy(q) -> float:
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    return np.where((q <= 0) | (q >= 1), 0.0, h)[()]


# -- error estimation --------------------------------------------------------


@dataclass(frozen=True)
class QberEstimate:
    value: float
    low: float
    high: float
    errors: int
    n_sample: int


def qber_interval(errors: int, n: int, confidence: float = 0.95) -> QberEstimate:
    if n <= 0:
        raise DomainError("cannot estimate an error rate from an empty sample")
    ci = binomtest(errors, n).proportion_ci(confidence_level=confidence, method="wilson")
    return QberEstimate(errors / n, float(ci.low), float(ci.high), errors, n)


def estimate_qber(keys: SiftedKey, sample_fraction: float = 0.1, rng=None, confidence: float = 0.95):
    """Disclose a random sample of positions; returns (estimate, remaining keys)."""
    if not (0.0 < sample_fraction < 1.0):
        raise DomainError("sample fraction must lie in (0, 1)")
    n = len(keys)
    if n == 0:
        raise DomainError("empty key")
    rng = np.random.default_rng(rng)
    k = max(1, int(round(sample_fraction * n)))
    picked = np.zeros(n, dtype=bool)
    picked[rng.choice(n, size=k, replace=False)] = True
    errors = int(np.count_nonzero(keys.alice[picked] != keys.bob[picked]))
    gates = None if keys.gate_index is None else keys.gate_index[~picked]
    rest = SiftedKey(keys.alice[~picked], keys.bob[~picked], gates)
    return qber_interval(errors, k, confidence), rest


# -- universal hashing -------------------------------------------------------


def toeplitz_hash(bits: np.ndarray, out_len: int, seed: int) -> np.ndarray:
    """Multiply ``bits`` by a seeded random ``out_len x n`` Toeplitz matrix over GF(2).

    The matrix entry (i, j) is ``t[i - j + n - 1]`` for a random vector ``t``
    of length ``n + out_len - 1``, so the product is a slice of a convolution.
    """
    x = np.asarray(bits, dtype=np.uint8)
    n = x.size
    if out_len <= 0 or n == 0:
        return np.zeros(0, dtype=np.uint8)
    t = np.random.default_rng(seed).integers(0, 2, size=n + out_len - 1, dtype=np.uint8)
    conv = fftconvolve(t.astype(float), x.astype(float))[n - 1 : n - 1 + out_len]
    return (np.rint(conv).astype(np.int64) & 1).astype(np.uint8)


def final_key_length(n: int, qber: float, leaked_bits: int, margin: int = 0) -> int:
    return max(0, int(math.floor(n * (1.0 - binary_entropy(qber)) - leaked_bits - margin)))


def privacy_amplify(key: np.ndarray, leaked_bits: int, qber: float, margin: int = 0, seed: int = 0) -> np.ndarray:
    """Compress ``key`` to n(1-h(q)) - leaked - margin bits; empty when nothing is left."""
    m = final_key_length(len(key), qber, leaked_bits, margin)
    return toeplitz_hash(key, m, seed)


# -- reconciliation ----------------------------------------------------------


@dataclass
class ReconciliationTranscript:
    rounds: int = 0
    parities_disclosed: int = 0
    corrected_errors: int = 0
    messages: int = 0
    verify_bits: int = 0
    initial_block: int = 0

    @property
    def leaked_bits(self) -> int:
        return self.parities_disclosed + self.verify_bits

    def to_json(self) -> str:
        d = asdict(self)
        d["leaked_bits"] = self.leaked_bits
        return json.dumps(d, indent=2, sort_keys=True)


def _permutation(n: int, seed: int, pass_index: int) -> np.ndarray:
    if pass_index == 0:
        return np.arange(n)
    return np.random.default_rng([seed, pass_index]).permutation(n)


class _ParityOracle:
    """Alice's end: answers parity questions about her fixed key."""

    def __init__(self, key: np.ndarray, seed: int):
        self._key = np.asarray(key, dtype=np.uint8).copy()
        self._seed = seed
        self._prefix: dict[int, np.ndarray] = {}

    def _cumsum(self, p: int) -> np.ndarray:
        if p not in self._prefix:
            permuted = self._key[_permutation(self._key.size, self._seed, p)]
            self._prefix[p] = np.concatenate(([0], np.cumsum(permuted, dtype=np.int64)))
        return self._prefix[p]

    def parities(self, p: int, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
        cs = self._cumsum(p)
        return ((cs[ends] - cs[starts]) & 1).astype(np.uint8)

    def digest(self, hash_seed: int) -> np.ndarray:
        return toeplitz_hash(self._key, VERIFY_BITS, hash_seed)


class ParityChannel:
    """Public channel between the two parties; it only counts what crosses it."""

    def __init__(self, alice: _ParityOracle, transcript: ReconciliationTranscript):
        self._alice = alice
        self._log = transcript

    def ask(self, p: int, starts, ends) -> np.ndarray:
        starts, ends = np.atleast_1d(starts), np.atleast_1d(ends)
        self._log.messages += 1
        self._log.parities_disclosed += starts.size
        return self._alice.parities(p, starts, ends)

    def digest(self, hash_seed: int) -> np.ndarray:
        self._log.messages += 1
        self._log.verify_bits += VERIFY_BITS
        return self._alice.digest(hash_seed)


class _CascadeBob:
    def __init__(self, key: np.ndarray, channel: ParityChannel, seed: int, transcript: ReconciliationTranscript):
        self.key = np.asarray(key, dtype=np.uint8).copy()
        self.n = self.key.size
        self.channel = channel
        self.seed = seed
        self.log = transcript
        self.perm: list[np.ndarray] = []
        self.inv: list[np.ndarray] = []
        self.permuted: list[list[int]] = []
        self.block: list[int] = []
        self.alice_par: list[np.ndarray] = []
        self.bob_par: list[np.ndarray] = []
        self.known: dict[tuple[int, int, int], int] = {}

    def _ask_one(self, p: int, s: int, e: int) -> int:
        key = (p, s, e)
        if key not in self.known:
            self.known[key] = int(self.channel.ask(p, s, e)[0])
        return self.known[key]

    def _locate(self, p: int, j: int) -> int:
        """Binary search an odd block of pass ``p``; returns an original index."""
        bits = self.permuted[p]
        k = self.block[p]
        s, e = j * k, min((j + 1) * k, self.n)
        while e - s > 1:
            mid = (s + e) // 2
            if self._ask_one(p, s, mid) != (sum(bits[s:mid]) & 1):
                e = mid
            else:
                s = mid
        return int(self.perm[p][s])

    def _flip(self, x: int, pending: list[tuple[int, int]]) -> None:
        self.key[x] ^= 1
        self.log.corrected_errors += 1
        for q in range(len(self.perm)):
            pos = int(self.inv[q][x])
            self.permuted[q][pos] ^= 1
            blk = pos // self.block[q]
            self.bob_par[q][blk] ^= 1
            if self.bob_par[q][blk] != self.alice_par[q][blk]:
                pending.append((q, blk))

    def run_pass(self, block_size: int) -> None:
        p = len(self.perm)
        perm = _permutation(self.n, self.seed, p)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(self.n)
        k = max(1, min(block_size, self.n))
        starts = np.arange(0, self.n, k)
        ends = np.minimum(starts + k, self.n)
        permuted = self.key[perm]
        cs = np.concatenate(([0], np.cumsum(permuted, dtype=np.int64)))
        self.perm.append(perm)
        self.inv.append(inv)
        self.permuted.append(permuted.tolist())
        self.block.append(k)
        self.alice_par.append(self.channel.ask(p, starts, ends))
        self.bob_par.append(((cs[ends] - cs[starts]) & 1).astype(np.uint8))
        for s, e, a in zip(starts, ends, self.alice_par[p]):
            self.known[(p, int(s), int(e))] = int(a)
        self.log.rounds += 1

        pending = [(p, int(j)) for j in np.flatnonzero(self.alice_par[p] != self.bob_par[p])]
        while pending:
            q, j = pending.pop()
            if self.bob_par[q][j] == self.alice_par[q][j]:
                continue
            self._flip(self._locate(q, j), pending)


def reconcile(
    alice_key: np.ndarray,
    bob_key: np.ndarray,
    qber: float,
    seed: int = 0,
    passes: int = 4,
    max_passes: int = 12,
    cutoff: float = 0.15,
) -> tuple[np.ndarray, ReconciliationTranscript]:
    """Cascade: Bob corrects his key to Alice's using her block parities.

    ``seed`` fixes the public shuffles and verification hashes.  Returns
    Bob's corrected key, which equals Alice's unless a 64-bit universal hash
    collides.
    """
    alice_key = np.asarray(alice_key, dtype=np.uint8)
    bob_key = np.asarray(bob_key, dtype=np.uint8)
    if alice_key.shape != bob_key.shape:
        raise DomainError("keys must have equal length")
    if not (0.0 <= qber < cutoff):
        raise ReconciliationError(f"error rate {qber:.3f} is not below the cutoff {cutoff}")
    log = ReconciliationTranscript()
    n = alice_key.size
    if n == 0:
        return bob_key.copy(), log
    k1 = max(4, int(math.ceil(0.73 / qber))) if qber > 0 else n
    log.initial_block = min(k1, n)
    channel = ParityChannel(_ParityOracle(alice_key, seed), log)
    bob = _CascadeBob(bob_key, channel, seed, log)

    for i in range(max_passes):
        bob.run_pass(k1 << min(i, 40))
        if i + 1 < passes:
            continue
        hash_seed = int(np.random.default_rng([seed, 1 << 20, i]).integers(1 << 62))
        if np.array_equal(channel.digest(hash_seed), toeplitz_hash(bob.key, VERIFY_BITS, hash_seed)):
            if log.leaked_bits >= n:
                break
            return bob.key, log
    raise ReconciliationError(
        f"keys still differ after {log.rounds} passes ({log.parities_disclosed} parities disclosed)"
    )


# -- net rate ----------------------------------------------------------------


@dataclass(frozen=True)
class NetRateModel:
    """Fraction of sifted bits surviving distillation as a function of QBER."""

    shrink: Callable[[float], float]
    cutoff: float
    name: str = "custom"

    def __post_init__(self):
        grid = np.linspace(0.0, 0.5, 501)
        r = np.array([self.shrink(q) for q in grid])
        if r[0] > 1.0 or np.any(r < 0):
            raise DomainError("shrink function must map into [0, 1]")
        if np.any(np.diff(r) > 1e-12):
            raise DomainError("shrink function must be non-increasing")
        if np.any(r[grid >= self.cutoff] > 0):
            raise DomainError("shrink function must vanish beyond its cutoff")

    def __call__(self, qber: float) -> float:
        return 0.0 if qber >= self.cutoff else float(self.shrink(qber))


def calibrate_ec_inefficiency(raw_rate: float, qber: float, net: float) -> float:
    """Solve raw * (1 - (1 + f) h(q)) = net for f."""
    return (1.0 - net / raw_rate) / float(binary_entropy(qber)) - 1.0


def entropy_model(f: float = CALIBRATED_EC_INEFFICIENCY) -> NetRateModel:
    """r(q) = max(0, 1 - (1 + f) h(q))."""
    from scipy.optimize import brentq

    cutoff = brentq(lambda q: 1.0 - (1.0 + f) * binary_entropy(q), 1e-9, 0.5)
    return NetRateModel(
        lambda q: max(0.0, 1.0 - (1.0 + f) * float(binary_entropy(q))), cutoff, name=f"entropy(f={f:.4f})"
    )


def net_rate(raw_rate: float, qber: float, model: NetRateModel | None = None) -> float:
    model = entropy_model() if model is None else model
    return raw_rate * model(qber)


# -- key files ---------------------------------------------------------------


def write_key(path, bits: np.ndarray, **meta) -> tuple[Path, Path]:
    """Write packed key bits to ``path`` and a JSON sidecar next to it."""
    path = Path(path)
    bits = np.asarray(bits, dtype=np.uint8)
    path.write_bytes(np.packbits(bits).tobytes())
    side = path.with_suffix(path.suffix + ".json")
    side.write_text(json.dumps({"length": int(bits.size), **meta}, indent=2, sort_keys=True) + "\n")
    return path, side


def read_key(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    raw = np.frombuffer(path.read_bytes(), dtype=np.uint8)
    return np.unpackbits(raw)[: meta["length"]], meta
