"""Closed-form error budget of the entangled-pair link.

Everything is evaluated per gate at Bob, i.e. per photon detected by Alice.
The additive ``total`` is the usual small-QBER approximation
incorrect/correct; ``counted`` is the ratio a counting experiment (or the
Monte Carlo) actually measures, incorrect/(all sifted counts).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

from scipy.optimize import brentq

from .channel import db_to_linear
from .errors import DomainError


@dataclass(frozen=True)
class SourceParams:
    mu: float = 0.64  # P(partner heads to Bob | Alice detection)
    nu: float = 0.011  # P(uncorrelated photon within a gate)
    f_alice: float = 1e5  # Alice's detection rate, Hz

    def __post_init__(self):
        # mu = 0 is allowed so that empty-channel sessions can be simulated
        if not (0.0 <= self.mu <= 1.0):
            raise DomainError(f"mu must lie in [0, 1], got {self.mu!r}")
        if not (0.0 <= self.nu < 1.0):
            raise DomainError(f"nu must lie in [0, 1), got {self.nu!r}")
        if not self.f_alice > 0:
            raise DomainError("f_alice must be > 0")


@dataclass(frozen=True)
class LinkBudget:
    source: SourceParams = field(default_factory=SourceParams)
    link_loss_db: float = 0.0
    bob_loss_db: float = 5.2
    q_interf: float = 0.5
    q_basis: float = 0.5
    q_acc: float = 0.5
    eta_d: float = 0.084
    p_cs: float = 3.9e-5  # dark probability per gate, per detector-bin
    visibility: float = 0.918
    side_leak: float = 0.0  # fraction of non-interfering photons inside the window

    def __post_init__(self):
        for name in ("q_interf", "q_basis", "q_acc", "eta_d", "visibility", "side_leak"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")
        if not (0.0 <= self.p_cs < 1.0):
            raise DomainError(f"p_cs must lie in [0, 1), got {self.p_cs!r}")
        db_to_linear(self.link_loss_db)
        db_to_linear(self.bob_loss_db)

    @property
    def T_L(self) -> float:
        return db_to_linear(self.link_loss_db)

    @property
    def T_B(self) -> float:
        return db_to_linear(self.bob_loss_db)

    @property
    def p_opt(self) -> float:
        return (1.0 - self.visibility) / 2.0

    def with_link_loss(self, loss_db: float) -> "LinkBudget":
        return replace(self, link_loss_db=loss_db)

    # per-gate probabilities of a photon reaching Bob's detectors inside the window
    @property
    def p_arrival_interfering(self) -> float:
        return self.source.mu * self.q_interf * self.T_L * self.T_B

    @property
    def p_arrival_side(self) -> float:
        return self.source.mu * (1.0 - self.q_interf) * self.side_leak * self.T_L * self.T_B

    @property
    def p_arrival_accidental(self) -> float:
        return self.source.nu * self.q_interf * self.T_L * self.T_B


@dataclass(frozen=True)
class QberBreakdown:
    qber_det: float
    qber_opt: float
    qber_acc: float
    raw_rate: float  # Hz, f_alice * p_correct
    p_correct: float
    p_incorrect: float
    p_sifted: float
    f_alice: float
    qber_side: float = 0.0

    @property
    def total(self) -> float:
        return self.qber_det + self.qber_opt + self.qber_acc + self.qber_side

    @property
    def counted(self) -> float:
        return self.p_incorrect / self.p_sifted

    @property
    def sifted_rate(self) -> float:
        """Rate of all sifted counts, noise included."""
        return self.f_alice * self.p_sifted

    def as_dict(self) -> dict:
        return {
            "qber_det": self.qber_det,
            "qber_opt": self.qber_opt,
            "qber_acc": self.qber_acc,
            "qber_side": self.qber_side,
            "total": self.total,
            "counted": self.counted,
            "raw_rate_hz": self.raw_rate,
            "sifted_rate_hz": self.sifted_rate,
            "p_correct": self.p_correct,
            "p_incorrect": self.p_incorrect,
            "p_sifted": self.p_sifted,
        }


def p_correct(b: LinkBudget) -> float:
    return b.source.mu * b.T_L * b.T_B * b.q_interf * b.eta_d * b.q_basis


def qber_breakdown(b: LinkBudget) -> QberBreakdown:
    pc = p_correct(b)
    if not pc > 0:
        raise DomainError("correct-count probability is zero; QBER is undefined")
    det_eff = b.eta_d * b.q_basis
    acc_sifted = b.p_arrival_accidental * det_eff
    side_sifted = b.p_arrival_side * det_eff
    # 4 detector-bins: half of the dark clicks land in Alice's basis, half of those are wrong
    dark_sifted = 2.0 * b.p_cs
    p_inc = b.p_cs + pc * b.p_opt + acc_sifted * b.q_acc + side_sifted * 0.5
    return QberBreakdown(
        qber_det=b.p_cs / pc,
        qber_opt=b.p_opt,
        qber_acc=acc_sifted * b.q_acc / pc,
        qber_side=side_sifted * 0.5 / pc,
        raw_rate=b.source.f_alice * pc,
        p_correct=pc,
        p_incorrect=p_inc,
        p_sifted=pc + dark_sifted + acc_sifted + side_sifted,
        f_alice=b.source.f_alice,
    )


def sweep_attenuation(b: LinkBudget, losses_db: Iterable[float]) -> list[tuple[float, QberBreakdown]]:
    """Breakdown at each absolute link loss (dB); Bob's own loss stays fixed."""
    return [(float(loss), qber_breakdown(b.with_link_loss(float(loss)))) for loss in losses_db]


def crossing_loss(b: LinkBudget, target: float = 0.10, measure: str = "counted", max_db: float = 80.0) -> float:
    """Link loss (dB) at which the chosen QBER measure reaches ``target``."""
    if measure not in ("counted", "total"):
        raise DomainError(f"unknown QBER measure {measure!r}")

    def excess(loss):
        return getattr(qber_breakdown(b.with_link_loss(loss)), measure) - target

    if excess(0.0) >= 0:
        return 0.0
    if excess(max_db) < 0:
        raise DomainError(f"QBER stays below {target} up to {max_db} dB")
    return brentq(excess, 0.0, max_db, xtol=1e-10)


SWEEP_COLUMNS = ("loss_db", "qber_det", "qber_opt", "qber_acc", "total", "raw_rate_hz", "counted")


def sweep_to_csv(rows: list[tuple[float, QberBreakdown]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for loss, br in rows:
        writer.writerow(
            [repr(loss)]
            + [repr(float(x)) for x in (br.qber_det, br.qber_opt, br.qber_acc, br.total, br.raw_rate, br.counted)]
        )
    return buf.getvalue()


def compare_plugplay(mu, q_interf, mu_pp, q_interf_pp, active_basis_factor=2.0) -> float:
    """QBER_det of a faint-pulse plug&play link over that of the pair link at equal loss."""
    denom = active_basis_factor * mu_pp * q_interf_pp
    if not denom > 0:
        raise DomainError("plug&play denominator must be > 0")
    return (mu * q_interf) / denom


def compare_pulsed_source(q_interf_gain: float = 0.5, windows_pulsed: int = 3, windows_cw: int = 2) -> float:
    """QBER_det of a pulsed-pump pair source relative to the continuous one.

    Using every photon (q_interf = 1) halves the dark-count contribution,
    while gating three windows instead of two raises it by 3/2.
    """
    return q_interf_gain * windows_pulsed / windows_cw


def ratio_in_db(ratio: float) -> float:
    """Extra link attenuation that changes QBER_det by ``ratio``."""
    if not ratio > 0:
        raise DomainError("ratio must be > 0")
    return 10.0 * math.log10(ratio)


def length_for_loss(loss_db: float, atten_coeff: float = 0.25, extra_loss_db: float = 0.0) -> float:
    """Fiber length (km) whose attenuation plus fixed losses equals ``loss_db``."""
    if not atten_coeff > 0:
        raise DomainError("attenuation coefficient must be > 0")
    return max(0.0, (loss_db - extra_loss_db) / atten_coeff)
