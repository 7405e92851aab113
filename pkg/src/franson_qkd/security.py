"""Photon-number-splitting accounting and the three security levels."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

from .channel import db_to_linear
from .errors import DomainError

AIR_ATTENUATION_DB_PER_KM = 0.64  # 1550 nm, good visibility


class SecurityLevel(str, Enum):
    PAIR_PASSIVE_IMMUNE = "pair_passive_immune"
    FAINT_PULSE_PRACTICAL = "faint_pulse_practical"
    CLASSICAL_PUBLIC_KEY = "classical_public_key"

    @property
    def rank(self) -> int:
        return list(SecurityLevel).index(self) + 1


@dataclass(frozen=True)
class FaintPulseSource:
    mean_photon_number: float
    repetition_rate: float = 1e6

    def __post_init__(self):
        if not self.mean_photon_number > 0:
            raise DomainError("mean photon number must be > 0")


def multiphoton_prob(mu: float) -> float:
    """P(n >= 2) for a Poisson number of photons with mean ``mu``."""
    if mu < 0:
        raise DomainError("mean photon number must be >= 0")
    # -expm1 keeps precision for small mu
    return -math.expm1(-mu) - mu * math.exp(-mu)


def multiphoton_fraction(mu: float, conditional: bool = False) -> float:
    """Multiphoton fraction per pulse, or among non-empty pulses when ``conditional``."""
    p2 = multiphoton_prob(mu)
    if not conditional:
        return p2
    p1 = -math.expm1(-mu)
    return p2 / p1 if p1 > 0 else 0.0


@dataclass(frozen=True)
class PnsCheck:
    secure: bool
    multiphoton: float
    transmission: float

    @property
    def margin(self) -> float:
        """transmission / multiphoton fraction; above one is safe."""
        return math.inf if self.multiphoton == 0 else self.transmission / self.multiphoton


def pns_condition(mu: float, T_L: float, T_B: float = 1.0, conditional: bool = False) -> PnsCheck:
    """Faint pulses resist splitting only while P(multiphoton) < T_L T_B."""
    for t in (T_L, T_B):
        if not (0.0 <= t <= 1.0):
            raise DomainError("transmittances must lie in [0, 1]")
    p = multiphoton_fraction(mu, conditional)
    return PnsCheck(p < T_L * T_B, p, T_L * T_B)


def pns_threshold_db(mu: float, conditional: bool = False) -> float:
    """Total loss (dB) at which the splitting condition stops holding."""
    p = multiphoton_fraction(mu, conditional)
    return math.inf if p == 0 else 10.0 * math.log10(1.0 / p)


def faint_pulse_penalty(mu: float) -> float:
    """Mean photon number below one expressed as equivalent fiber loss in dB."""
    if not (0.0 < mu <= 1.0):
        raise DomainError("mean photon number must lie in (0, 1]")
    return -10.0 * math.log10(mu)


@dataclass(frozen=True)
class SystemDescription:
    source: str  # "pair", "faint_pulse" or "classical"
    preparation: str = "passive"  # "passive" or "active"
    mean_photon_number: float | None = None
    loss_db: float = 0.0  # T_L T_B in dB
    conditional: bool = False


@dataclass(frozen=True)
class SecurityAssessment:
    level: SecurityLevel
    multiphoton_fraction: float
    pns_vulnerable: bool
    notes: list[str] = field(default_factory=list)
    pns_margin: float | None = None

    def to_json(self) -> str:
        d = asdict(self)
        d["level"] = self.level.value
        d["rank"] = self.level.rank
        if d["pns_margin"] is not None and math.isinf(d["pns_margin"]):
            d["pns_margin"] = "inf"
        return json.dumps(d, indent=2, sort_keys=True)


THIS_SYSTEM = SystemDescription(source="pair", preparation="passive")


def classify(system: SystemDescription) -> SecurityAssessment:
    if system.source == "pair":
        if system.preparation not in ("passive", "active"):
            raise DomainError(f"unknown preparation mode {system.preparation!r}")
        notes = ["passive basis and bit choice: photons of different pairs are uncorrelated",
                 "double detections at Alice must be assigned a random value, not discarded"]
        if system.preparation == "active":
            notes = ["active basis switching prepares simultaneous pairs in the same basis",
                     "multi-pair emissions give probabilistic information on the bit value"]
        return SecurityAssessment(SecurityLevel.PAIR_PASSIVE_IMMUNE, 0.0, False, notes)
    if system.source == "faint_pulse":
        if system.mean_photon_number is None:
            raise DomainError("a faint pulse system needs its mean photon number")
        check = pns_condition(system.mean_photon_number, db_to_linear(system.loss_db), 1.0, system.conditional)
        notes = [
            f"splitting condition holds up to {pns_threshold_db(system.mean_photon_number, system.conditional):.2f} dB",
            f"a lossless free-space bypass would face {AIR_ATTENUATION_DB_PER_KM} dB/km in air at 1550 nm",
        ]
        return SecurityAssessment(
            SecurityLevel.FAINT_PULSE_PRACTICAL, check.multiphoton, not check.secure, notes, check.margin
        )
    if system.source == "classical":
        notes = ["security rests on computational hardness; future advances threaten stored traffic"]
        return SecurityAssessment(SecurityLevel.CLASSICAL_PUBLIC_KEY, 0.0, False, notes)
    raise DomainError(f"unknown system type {system.source!r}")
