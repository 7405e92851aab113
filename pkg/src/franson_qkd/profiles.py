"""Experiment profiles and their plain-text key/value format.

Grammar, one entry per line::

    # comment
    key = value

Keys are dotted field paths (``source.mu``, ``bob0.efficiency``, ...);
``none``, ``true`` and ``false`` are literals, anything else is parsed
according to the type of the field it sets.  A few short aliases exist for
command-line overrides, see ``ALIASES``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import ChannelParams, dispersion_spread
from .detection import DetectorParams
from .errors import ConfigError, DomainError
from .interference import CoincidencePeaks, peak_fwhm, side_peak_leakage
from .montecarlo import SimulationConfig
from .qber_model import LinkBudget, SourceParams

# InGaAs APDs, 2 ns gates; the efficiency is the value backed out of the measured rate
_BOB = DetectorParams(efficiency=0.084, dark_prob_per_gate=3.9e-5, gate_width=2.0, jitter_fwhm=250.0)
# actively quenched Si APDs, inhibited 500 ns after each count
_ALICE = DetectorParams(efficiency=0.5, dark_prob_per_gate=0.0, gate_width=2.0, jitter_fwhm=350.0, dead_time=500.0)


@dataclass(frozen=True)
class ExperimentProfile:
    name: str = "custom"
    source: SourceParams = field(default_factory=SourceParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    bob_loss_db: float = 5.2
    bob0: DetectorParams = _BOB
    bob1: DetectorParams = _BOB
    alice0: DetectorParams = _ALICE
    alice1: DetectorParams = _ALICE
    q_interf: float = 0.5
    q_basis: float = 0.5
    q_acc: float = 0.5
    visibility: float = 0.918
    coincidence_jitter_ps: float = 800.0
    path_delay_ns: float = 3.0
    window_halfwidth_ns: float = 1.0
    side_peak_leakage: bool = False
    alice_double_prob: float = 0.0
    drift_amplitude: float = 0.0
    drift_period: float = 0.0
    gates: int = 10_000_000
    seed: int = 1

    @property
    def bob(self) -> tuple[DetectorParams, DetectorParams]:
        return self.bob0, self.bob1

    def peaks(self) -> CoincidencePeaks:
        fwhm = peak_fwhm(self.coincidence_jitter_ps, dispersion_spread(self.channel))
        return CoincidencePeaks(self.path_delay_ns, fwhm, self.window_halfwidth_ns)

    def budget(self) -> LinkBudget:
        leak = side_peak_leakage(self.peaks()) if self.side_peak_leakage else 0.0
        return LinkBudget(
            source=self.source,
            link_loss_db=self.channel.total_loss_db,
            bob_loss_db=self.bob_loss_db,
            q_interf=self.q_interf,
            q_basis=self.q_basis,
            q_acc=self.q_acc,
            eta_d=float(np.mean([d.efficiency for d in self.bob])),
            p_cs=float(np.mean([d.effective_dark for d in self.bob])),
            visibility=self.visibility,
            side_leak=leak,
        )

    def simulation_config(self, verification: bool = False) -> SimulationConfig:
        return SimulationConfig(
            self.budget(),
            bob_efficiency=tuple(d.efficiency for d in self.bob),
            bob_dark=tuple(d.effective_dark for d in self.bob),
            alice_double_prob=self.alice_double_prob,
            alice_dead_time=max(self.alice0.dead_time, self.alice1.dead_time),
            drift_amplitude=self.drift_amplitude,
            drift_period=self.drift_period,
            verification=verification,
        )


LAB_20M = ExperimentProfile(
    name="lab-20m",
    # 20 m patch cord between two rooms, taken as lossless
    channel=ChannelParams(length=0.02, atten_coeff=0.0, fiber_type="standard"),
    visibility=0.918,
)

SPOOL_8450M = ExperimentProfile(
    name="spool-8450m",
    # DS fiber spool, 0.25 dB/km plus junction losses; total trimmed to the measured 4.7 dB
    channel=ChannelParams(length=8.45, atten_coeff=0.25, extra_loss_db=2.5875, fiber_type="ds"),
    visibility=0.917,
)

BUILTIN_PROFILES = {p.name: p for p in (LAB_20M, SPOOL_8450M)}

ALIASES = {
    "mu": ("source.mu",),
    "nu": ("source.nu",),
    "f_alice": ("source.f_alice",),
    "V": ("visibility",),
    "p_cs": ("bob0.dark_prob_per_gate", "bob1.dark_prob_per_gate"),
    "eta": ("bob0.efficiency", "bob1.efficiency"),
    "n_gates": ("gates",),
}


def to_flat(profile: ExperimentProfile) -> dict[str, object]:
    flat: dict[str, object] = {}

    def walk(obj, prefix):
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if dataclasses.is_dataclass(value):
                walk(value, f"{prefix}{f.name}.")
            else:
                flat[prefix + f.name] = value

    walk(profile, "")
    return flat


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps(profile: ExperimentProfile) -> str:
    lines = [f"# experiment profile {profile.name}"]
    lines += [f"{k} = {_format(v)}" for k, v in to_flat(profile).items()]
    return "\n".join(lines) + "\n"


def _field_type(obj, name):
    for f in dataclasses.fields(obj):
        if f.name == name:
            return f.type
    raise ConfigError(f"unknown profile key {name!r}")


def _parse_value(raw: str, current, type_hint: str):
    text = raw.strip()
    low = text.lower()
    if low == "none":
        if "None" not in str(type_hint):
            raise ConfigError(f"value may not be none: {raw!r}")
        return None
    try:
        if isinstance(current, bool) or type_hint == "bool":
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if isinstance(current, int) or type_hint == "int":
            return int(float(text)) if float(text).is_integer() else int(text)
        if isinstance(current, float) or "float" in str(type_hint):
            return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} for a field of type {type_hint}") from None
    return text


def _set(obj, path: list[str], raw: str):
    head = path[0]
    hint = _field_type(obj, head)
    current = getattr(obj, head)
    if len(path) == 1:
        if dataclasses.is_dataclass(current):
            raise ConfigError(f"{head!r} is a group, not a value")
        return replace(obj, **{head: _parse_value(raw, current, hint)})
    if not dataclasses.is_dataclass(current):
        raise ConfigError(f"unknown profile key {'.'.join(path)!r}")
    return replace(obj, **{head: _set(current, path[1:], raw)})


def apply_overrides(profile: ExperimentProfile, items: dict[str, str] | list[tuple[str, str]]) -> ExperimentProfile:
    pairs = items.items() if isinstance(items, dict) else items
    try:
        for key, raw in pairs:
            for target in ALIASES.get(key.strip(), (key.strip(),)):
                profile = _set(profile, target.split("."), raw)
        profile.simulation_config()
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    return profile


def loads(text: str, base: ExperimentProfile | None = None) -> ExperimentProfile:
    items = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        items.append((key.strip(), value.strip()))
    return apply_overrides(base or ExperimentProfile(), items)


def parse_assignment(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def load_profile(name_or_path: str) -> ExperimentProfile:
    if name_or_path in BUILTIN_PROFILES:
        return BUILTIN_PROFILES[name_or_path]
    path = Path(name_or_path)
    if not path.is_file():
        known = ", ".join(sorted(BUILTIN_PROFILES))
        raise ConfigError(f"no profile {name_or_path!r} (built-in: {known})")
    return loads(path.read_text())
