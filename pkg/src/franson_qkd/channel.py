"""Passive fiber channel: loss bookkeeping in dB and chromatic dispersion."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# dispersion shifted fiber has its zero close to 1550 nm
DISPERSION_PS_NM_KM = {"standard": 18.0, "ds": 0.0}


def db_to_linear(loss_db: float) -> float:
    """Convert a non-negative loss in dB into a transmittance in (0, 1]."""
    if not math.isfinite(loss_db) or loss_db < 0:
        raise DomainError(f"loss must be finite and >= 0 dB, got {loss_db!r}")
    return 10.0 ** (-loss_db / 10.0)


def linear_to_db(transmittance: float) -> float:
    if not (0.0 < transmittance <= 1.0):
        raise DomainError(f"transmittance must lie in (0, 1], got {transmittance!r}")
    return -10.0 * math.log10(transmittance)


@dataclass(frozen=True)
class Attenuation:
    """A loss kept in dB; composition adds dB and multiplies transmittances."""

    value_db: float

    def __post_init__(self):
        if not math.isfinite(self.value_db) or self.value_db < 0:
            raise DomainError(f"attenuation must be finite and >= 0 dB, got {self.value_db!r}")

    @property
    def transmittance(self) -> float:
        return db_to_linear(self.value_db)

    def __add__(self, other: "Attenuation") -> "Attenuation":
        return Attenuation(self.value_db + other.value_db)


@dataclass(frozen=True)
class ChannelParams:
    """Fiber link between the source and Bob.

    ``dispersion_coeff`` left as ``None`` takes the nominal value of the fiber
    type, so dispersion shifted ("ds") links do not broaden the peaks.
    """

    length: float = 0.0  # km
    atten_coeff: float = 0.25  # dB/km
    extra_loss_db: float = 0.0  # connectors, junctions
    dispersion_coeff: float | None = None  # ps nm^-1 km^-1
    spectral_width: float = 6.0  # nm FWHM
    fiber_type: str = "standard"

    def __post_init__(self):
        if self.fiber_type not in DISPERSION_PS_NM_KM:
            raise DomainError(f"unknown fiber type {self.fiber_type!r}")
        for name in ("length", "atten_coeff", "extra_loss_db", "spectral_width"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
        if self.dispersion_coeff is not None and (
            not math.isfinite(self.dispersion_coeff) or self.dispersion_coeff < 0
        ):
            raise DomainError(f"dispersion_coeff must be >= 0, got {self.dispersion_coeff!r}")

    @property
    def dispersion(self) -> float:
        if self.dispersion_coeff is not None:
            return self.dispersion_coeff
        return DISPERSION_PS_NM_KM[self.fiber_type]

    @property
    def loss(self) -> Attenuation:
        return Attenuation(self.length * self.atten_coeff + self.extra_loss_db)

    @property
    def total_loss_db(self) -> float:
        return self.loss.value_db

    @property
    def transmittance(self) -> float:
        return self.loss.transmittance


def dispersion_spread(params: ChannelParams) -> float:
    """Temporal spreading in ps of a pulse after the link."""
    return params.dispersion * params.spectral_width * params.length
