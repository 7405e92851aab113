"""Photon counting detectors: Si APDs at Alice, gated InGaAs APDs at Bob."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError


def _check_prob(name: str, value: float, upper_open: bool = False) -> None:
    ok = 0.0 <= value < 1.0 if upper_open else 0.0 <= value <= 1.0
    if not (math.isfinite(value) and ok):
        raise DomainError(f"{name} must be a probability, got {value!r}")


@dataclass(frozen=True)
class DetectorParams:
    efficiency: float
    dark_prob_per_gate: float = 0.0
    gate_width: float = 2.0  # ns
    jitter_fwhm: float = 250.0  # ps
    dead_time: float = 0.0  # ns, free running detectors only
    afterpulse_factor: float = 1.0  # multiplies the dark probability

    def __post_init__(self):
        _check_prob("efficiency", self.efficiency)
        _check_prob("dark_prob_per_gate", self.dark_prob_per_gate, upper_open=True)
        if not self.gate_width > 0:
            raise DomainError("gate width must be > 0")
        if self.afterpulse_factor < 1.0:
            raise DomainError("afterpulse factor must be >= 1")
        _check_prob("effective dark probability", self.effective_dark, upper_open=True)

    @property
    def effective_dark(self) -> float:
        return self.dark_prob_per_gate * self.afterpulse_factor


def click_prob(signal_prob: float, d: DetectorParams) -> float:
    """Probability of a click in one gate given a photon arrives w.p. ``signal_prob``."""
    _check_prob("signal_prob", signal_prob)
    return 1.0 - (1.0 - d.efficiency * signal_prob) * (1.0 - d.effective_dark)


class Pattern(str, Enum):
    NONE = "none"
    SINGLE = "single"
    MULTIPLE = "multiple"


@dataclass(frozen=True)
class ClickPattern:
    """Click flags indexed ``[time_bin, detector]``.

    At Bob the time bin encodes the basis and the detector the bit value, so
    the two detectors gated twice give four detector-bins.  Alice's four
    ports use the same layout.
    """

    flags: np.ndarray

    @classmethod
    def empty(cls) -> "ClickPattern":
        return cls(np.zeros((2, 2), dtype=bool))

    @property
    def n_clicks(self) -> int:
        return int(np.count_nonzero(self.flags))

    def clicks(self) -> list[tuple[int, int]]:
        return [(int(b), int(d)) for b, d in np.argwhere(self.flags)]

    def classify(self) -> Pattern:
        n = self.n_clicks
        if n == 0:
            return Pattern.NONE
        return Pattern.SINGLE if n == 1 else Pattern.MULTIPLE


def forward_raw_rate(efficiency, f_alice, mu, T_L, T_B, q_interf=0.5, q_basis=0.5):
    return f_alice * mu * T_L * T_B * q_interf * efficiency * q_basis


def solve_efficiency(raw_rate, f_alice, mu, T_L, T_B, q_interf=0.5, q_basis=0.5) -> float:
    """Back out Bob's detection efficiency from a measured sifted rate."""
    denom = f_alice * mu * T_L * T_B * q_interf * q_basis
    if not denom > 0:
        raise DomainError("rate equation denominator must be > 0")
    if raw_rate < 0:
        raise DomainError("raw rate must be >= 0")
    return raw_rate / denom
