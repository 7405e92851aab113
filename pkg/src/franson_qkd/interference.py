"""Franson two-photon interference and the coincidence-time picture.

Phases are in radians, times in ns unless a name says otherwise.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DomainError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))  # 2.3548...
PEAK_WEIGHTS = (0.25, 0.5, 0.25)


@dataclass(frozen=True)
class PhaseSetting:
    """Interferometer phases plus the analyzer (basis) each photon went to.

    The second analyzer adds +pi/2 at Alice and -pi/2 at Bob, so matching
    bases leave the phase sum unchanged.
    """

    phi_a: float = 0.0
    phi_b: float = 0.0
    basis_a: int = 0
    basis_b: int = 0

    @property
    def phase_sum(self) -> float:
        return (self.phi_a + self.basis_a * math.pi / 2) + (self.phi_b - self.basis_b * math.pi / 2)


def correlation_probs(setting: PhaseSetting) -> tuple[float, float]:
    """Return (P_correlation, P_anticorrelation) for ideal fringes."""
    return outcome_probs_with_visibility(setting, 1.0)


def outcome_probs_with_visibility(setting: PhaseSetting, visibility: float) -> tuple[float, float]:
    if not (0.0 <= visibility <= 1.0):
        raise DomainError(f"visibility must lie in [0, 1], got {visibility!r}")
    c = visibility * math.cos(setting.phase_sum)
    p_anti = 0.5 * (1.0 - c)
    return 1.0 - p_anti, p_anti


def wrong_port_prob(visibility: float) -> float:
    """p_opt = (1 - V) / 2, the matched-basis error probability at zero phase."""
    return outcome_probs_with_visibility(PhaseSetting(), visibility)[1]


def peak_fwhm(jitter_fwhm_ps: float, dispersion_spread_ps: float = 0.0) -> float:
    """Coincidence peak width in ns: jitter and dispersion added in quadrature."""
    return math.hypot(jitter_fwhm_ps, dispersion_spread_ps) / 1000.0


@dataclass(frozen=True)
class CoincidencePeaks:
    separation: float = 3.0  # interferometer imbalance, ns
    peak_fwhm: float = 0.8
    window_halfwidth: float = 1.0

    def __post_init__(self):
        if not self.separation > 0:
            raise DomainError("peak separation must be > 0")
        if not self.peak_fwhm > 0:
            raise DomainError("peak FWHM must be > 0")
        if self.window_halfwidth < 0:
            raise DomainError("window half-width must be >= 0")

    @property
    def sigma(self) -> float:
        return self.peak_fwhm / FWHM_PER_SIGMA

    @property
    def centers(self) -> tuple[float, float, float]:
        return (-self.separation, 0.0, self.separation)


def _mass(center: float, sigma: float, lo, hi):
    return norm.cdf(hi, loc=center, scale=sigma) - norm.cdf(lo, loc=center, scale=sigma)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    density: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def total(self) -> float:
        return float(np.sum(self.density * self.widths))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_ns", "density"])
        for t, d in zip(self.centers, self.density):
            writer.writerow([repr(float(t)), repr(float(d))])
        return buf.getvalue()


def coincidence_histogram(
    peaks: CoincidencePeaks,
    weights: tuple[float, float, float] = PEAK_WEIGHTS,
    bin_width: float | None = None,
    span_sigmas: float = 10.0,
) -> Histogram:
    """Binned density of Alice-Bob arrival time differences.

    Each bin holds the exact Gaussian mass it covers, so the total is one up
    to the tails beyond ``span_sigmas``.
    """
    if bin_width is None:
        bin_width = peaks.peak_fwhm / 10.0
    if not (0.0 < bin_width <= peaks.peak_fwhm / 5.0):
        raise DomainError(f"bin width must lie in (0, fwhm/5], got {bin_width!r}")
    if not math.isclose(sum(weights), 1.0, abs_tol=1e-12) or min(weights) < 0:
        raise DomainError("peak weights must be non-negative and sum to 1")
    sigma = peaks.sigma
    half_span = peaks.separation + span_sigmas * sigma
    n_bins = int(math.ceil(2 * half_span / bin_width))
    edges = (np.arange(n_bins + 1) - n_bins / 2) * bin_width
    mass = np.zeros(n_bins)
    for w, c in zip(weights, peaks.centers):
        mass += w * _mass(c, sigma, edges[:-1], edges[1:])
    return Histogram(edges=edges, density=mass / bin_width)


def central_fraction(peaks: CoincidencePeaks, halfwidth: float) -> float:
    """Fraction of the interfering peak inside |t| < halfwidth."""
    return float(_mass(0.0, peaks.sigma, -halfwidth, halfwidth))


def side_peak_leakage(peaks: CoincidencePeaks, halfwidth: float | None = None) -> float:
    """Fraction of non-interfering events landing inside |t| < halfwidth."""
    h = peaks.window_halfwidth if halfwidth is None else halfwidth
    return float(_mass(peaks.separation, peaks.sigma, -h, h))


def window_tradeoff(
    peaks: CoincidencePeaks, window_halfwidth: float, baseline_halfwidth: float
) -> tuple[float, float]:
    """Narrow the discriminator from ``baseline_halfwidth`` to ``window_halfwidth``.

    Returns (true coincidences retained, accidental coincidences retained);
    accidentals are flat in time so they scale with the window width.
    """
    if baseline_halfwidth <= 0:
        raise DomainError("baseline window must be > 0")
    if not (0.0 <= window_halfwidth <= baseline_halfwidth):
        raise DomainError("window must satisfy 0 <= window <= baseline")
    retained = central_fraction(peaks, window_halfwidth) / central_fraction(peaks, baseline_halfwidth)
    return retained, window_halfwidth / baseline_halfwidth
