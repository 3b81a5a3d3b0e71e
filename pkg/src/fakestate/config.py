"""
Run configuration: a flat ``key = value`` text file with dotted section prefixes.

Example::

    # 120 km reference link
    channel.alpha_db_per_km = 0.21
    channel.length_km       = 120
    detector.eta_bob        = 0.045
    source.signal           = 0.479
    source.decoy            = 0.127

Blank lines and ``#`` comments are ignored. Unknown keys, duplicate keys and
malformed values are rejected with the offending line number.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable

from .attacks import AttackStrategy, Variant
from .finite_stats import SessionStats
from .model import ChannelParams, DetectorParams, ParameterError, SourceLabel, SourceSpec, SystemParams
from .montecarlo import TrialConfig

FORMATS = ("text", "csv", "json")
_LABELS = tuple(l.value for l in SourceLabel)


class ConfigError(ValueError):
    pass


def _parse_int(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        f = float(s)
        if not f.is_integer():
            raise ValueError(f"expected an integer, got {s!r}")
        return int(f)


def _parse_grid(s: str) -> tuple[float, float, float]:
    parts = s.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be start:stop:step, got {s!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"grid needs step > 0 and stop >= start, got {s!r}")
    return start, stop, step


def _parse_format(s: str) -> str:
    if s not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {s!r}")
    return s


def _parse_strategy(s: str) -> str:
    allowed = tuple(v.value for v in Variant) + ("honest",)
    if s not in allowed:
        raise ValueError(f"strategy must be one of {allowed}, got {s!r}")
    return s


def _parse_prob_or_auto(s: str) -> float | None:
    return None if s == "auto" else float(s)


_SCALAR_KEYS: dict[str, Callable[[str], object]] = {
    "channel.alpha_db_per_km": float,
    "channel.length_km": float,
    "detector.eta_bob": float,
    "detector.dark_count": float,
    "detector.misalignment": float,
    "session.pulse_count": _parse_int,
    "session.confidence_exponent": float,
    "strategy.name": _parse_strategy,
    "strategy.resend_prob": _parse_prob_or_auto,
    "strategy.flip_prob": _parse_prob_or_auto,
    "strategy.intercept_km": float,
    "sweep.grid": _parse_grid,
    "sweep.workers": _parse_int,
    "thresholds.resolution_km": float,
    "mc.pulses": _parse_int,
    "mc.seed": _parse_int,
    "mc.workers": _parse_int,
    "mc.trials": _parse_int,
    "mc.scaled_pulses": _parse_int,
    "output.format": _parse_format,
    "output.path": str,
}
_PATTERN_KEYS: list[tuple[re.Pattern, Callable[[str], object]]] = [
    (re.compile(rf"source\.({'|'.join(_LABELS)})"), float),
    (re.compile(rf"session\.pulses\.({'|'.join(_LABELS)})"), _parse_int),
    (re.compile(rf"mc\.mix\.({'|'.join(_LABELS)})"), float),
]


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs.

    ``resend_prob`` / ``flip_prob`` of None mean "auto": the CLI picks the
    centre of the signal source's admissible window.
    """
    system: SystemParams = field(default_factory=SystemParams)
    session: SessionStats = field(default_factory=SessionStats)
    strategy_name: str = "naive"
    resend_prob: float | None = None
    flip_prob: float | None = None
    intercept_km: float = 0.0
    grid: tuple[float, float, float] = (0.0, 120.0, 1.0)
    sweep_workers: int = 1
    resolution_km: float = 0.5
    trial: TrialConfig = field(default_factory=TrialConfig)
    fluct_trials: int = 200
    fluct_pulses: int = 10**7
    output_format: str = "text"
    output_path: str | None = None

    def strategy(self, resend_prob: float | None = None, flip_prob: float | None = None) -> AttackStrategy:
        if self.strategy_name == "honest":
            raise ValueError("'honest' is not an attack strategy")
        return AttackStrategy(
            Variant(self.strategy_name),
            resend_prob=resend_prob if resend_prob is not None else (self.resend_prob or 0.0),
            flip_prob=flip_prob if flip_prob is not None else (self.flip_prob or 0.0),
            intercept_km=self.intercept_km,
        )

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


def _lookup(key: str) -> Callable[[str], object] | None:
    if key in _SCALAR_KEYS:
        return _SCALAR_KEYS[key]
    for pat, conv in _PATTERN_KEYS:
        if pat.fullmatch(key):
            return conv
    return None


def parse_config(text: str, origin: str = "<config>") -> RunConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        conv = _lookup(key)
        if conv is None:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        try:
            values[key] = conv(val)
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: {key}: {exc}") from None
        lines[key] = lineno
    return _build(values, lines, origin)


def _section_line(lines: dict[str, int], prefix: str) -> int:
    hits = [n for k, n in lines.items() if k.startswith(prefix)]
    return min(hits) if hits else 0


def _build(v: dict[str, object], lines: dict[str, int], origin: str) -> RunConfig:
    base = RunConfig()

    def section(prefix: str, fn):
        try:
            return fn()
        except (ParameterError, ValueError, KeyError) as exc:
            raise ConfigError(f"{origin}:{_section_line(lines, prefix)}: {prefix.rstrip('.')}: {exc}") from None

    ch0, det0 = base.system.channel, base.system.detector
    channel = section("channel.", lambda: ChannelParams(
        v.get("channel.alpha_db_per_km", ch0.alpha_db_per_km), v.get("channel.length_km", ch0.length_km)))
    detector = section("detector.", lambda: DetectorParams(
        v.get("detector.eta_bob", det0.eta_bob),
        v.get("detector.dark_count", det0.dark_count),
        v.get("detector.misalignment", det0.misalignment)))
    src_keys = sorted((k for k in v if k.startswith("source.")), key=lambda k: lines[k])
    if src_keys:
        sources = section("source.", lambda: tuple(SourceSpec(SourceLabel(k.split(".")[1]), v[k]) for k in src_keys))
    else:
        sources = base.system.sources
    system = section("source.", lambda: SystemParams(channel, detector, sources))

    session = section("session.", lambda: SessionStats(
        v.get("session.pulse_count", base.session.pulse_count),
        v.get("session.confidence_exponent", base.session.confidence_exponent),
        {k.split(".")[2]: n for k, n in v.items() if k.startswith("session.pulses.")}))

    mix = {k.split(".")[2]: x for k, x in v.items() if k.startswith("mc.mix.")} or None
    trial = section("mc.", lambda: TrialConfig(
        v.get("mc.pulses", base.trial.pulses), v.get("mc.seed", base.trial.seed), mix,
        v.get("mc.workers", base.trial.workers)))

    cfg = RunConfig(
        system=system,
        session=session,
        strategy_name=v.get("strategy.name", base.strategy_name),
        resend_prob=v.get("strategy.resend_prob", base.resend_prob),
        flip_prob=v.get("strategy.flip_prob", base.flip_prob),
        intercept_km=v.get("strategy.intercept_km", base.intercept_km),
        grid=v.get("sweep.grid", base.grid),
        sweep_workers=v.get("sweep.workers", base.sweep_workers),
        resolution_km=v.get("thresholds.resolution_km", base.resolution_km),
        trial=trial,
        fluct_trials=v.get("mc.trials", base.fluct_trials),
        fluct_pulses=v.get("mc.scaled_pulses", base.fluct_pulses),
        output_format=v.get("output.format", base.output_format),
        output_path=v.get("output.path", base.output_path),
    )
    if cfg.strategy_name != "honest":
        section("strategy.", lambda: cfg.strategy())
    if not 0 <= cfg.intercept_km <= system.channel.length_km:
        raise ConfigError(f"{origin}:{lines.get('strategy.intercept_km', 0)}: strategy.intercept_km "
                          f"must be in [0, {system.channel.length_km}]")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


def reference_config_text() -> str:
    return resources.files("fakestate").joinpath("data/reference.cfg").read_text()


def reference_config() -> RunConfig:
    return parse_config(reference_config_text(), "reference.cfg")
