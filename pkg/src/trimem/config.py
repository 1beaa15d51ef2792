"""Dataclass configs for the three-node experiment and its Monte Carlo layer."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

N_NODES = 3


class ConfigError(ValueError):
    """Malformed or out-of-domain configuration."""


def _triple(value: Any, name: str) -> tuple[float, float, float]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),) * N_NODES
    try:
        vals = tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected a number or a list of {N_NODES} numbers") from exc
    if len(vals) != N_NODES:
        raise ConfigError(f"{name}: expected {N_NODES} per-node values, got {len(vals)}")
    return vals  # type: ignore[return-value]


@dataclass(frozen=True)
class MCSettings:
    shots: int = 10_000
    seed: int = 20240601
    sample_rate_hz: float = 1e8
    pulse_ns: float = 500.0
    filter_center_hz: float = 2.5e6
    filter_bandwidth_hz: float = 2e6
    filter_order: int = 4
    electronic_noise_rel: float = 0.01
    temporal_mode: str = "flat"
    chunk_shots: int = 2_000
    workers: int = 1

    def __post_init__(self) -> None:
        if self.shots < 2:
            raise ConfigError(f"shots must be >= 2, got {self.shots}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.sample_rate_hz <= 0 or self.pulse_ns <= 0:
            raise ConfigError("sample rate and pulse length must be positive")
        if self.n_samples < 16:
            raise ConfigError(
                f"pulse spans {self.n_samples} samples; need >= 16 (raise sample_rate_hz or pulse_ns)"
            )
        nyquist = self.sample_rate_hz / 2
        if not 0 < self.filter_bandwidth_hz < nyquist:
            raise ConfigError(f"filter bandwidth must lie in (0, {nyquist:g}) Hz")
        lo, hi = self.filter_band_hz
        if not (0 < lo and hi < nyquist):
            raise ConfigError(f"filter band {lo:g}-{hi:g} Hz does not fit below Nyquist {nyquist:g} Hz")
        if self.filter_order < 1:
            raise ConfigError("filter order must be >= 1")
        if self.electronic_noise_rel < 0:
            raise ConfigError("electronic_noise_rel must be >= 0")
        if self.temporal_mode not in ("flat", "hann"):
            raise ConfigError(f"temporal_mode must be 'flat' or 'hann', got {self.temporal_mode!r}")
        if self.chunk_shots < 1 or self.workers < 1:
            raise ConfigError("chunk_shots and workers must be >= 1")

    def with_shots(self, shots: int) -> MCSettings:
        return replace(self, shots=shots, chunk_shots=min(self.chunk_shots, shots))

    @property
    def n_samples(self) -> int:
        return int(round(self.sample_rate_hz * self.pulse_ns * 1e-9))

    @property
    def filter_band_hz(self) -> tuple[float, float]:
        """Band edges whose geometric mean is the centre frequency."""
        half = self.filter_bandwidth_hz / 2
        lo = math.sqrt(half**2 + self.filter_center_hz**2) - half
        return lo, lo + self.filter_bandwidth_hz


@dataclass(frozen=True)
class ExperimentSpec:
    """Per-node parameters of source, write, storage and read.

    Efficiencies are fractions. ``tau_s_ns=None`` means no storage decay.
    ``eta_M`` optionally overrides the ``eta_T * eta_W * exp(-t/tau_s)`` product.
    ``excess_noise`` is added at the write step, per quadrature, in units of
    the vacuum variance.
    """

    r: tuple[float, float, float] = (0.38, 0.38, 0.38)
    eta_T: tuple[float, float, float] = (1.0, 1.0, 1.0)
    eta_W: tuple[float, float, float] = (1.0, 1.0, 1.0)
    tau_s_ns: float | None = None
    t_ns: float = 0.0
    eta_read: tuple[float, float, float] = (1.0, 1.0, 1.0)
    excess_noise: tuple[float, float, float] = (0.0, 0.0, 0.0)
    eta_M: tuple[float, float, float] | None = None
    mc: MCSettings = field(default_factory=MCSettings)

    def __post_init__(self) -> None:
        for name in ("r", "eta_T", "eta_W", "eta_read", "excess_noise"):
            object.__setattr__(self, name, _triple(getattr(self, name), name))
        if self.eta_M is not None:
            object.__setattr__(self, "eta_M", _triple(self.eta_M, "eta_M"))
        if any(not math.isfinite(v) or v < 0 for v in self.r):
            raise ConfigError(f"r must be finite and >= 0, got {self.r}")
        for name in ("eta_T", "eta_W", "eta_read") + (("eta_M",) if self.eta_M else ()):
            vals = getattr(self, name)
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ConfigError(f"{name} must lie in [0, 1], got {vals}")
        if any(v < 0 for v in self.excess_noise):
            raise ConfigError("excess_noise must be >= 0")
        if self.tau_s_ns is not None and not self.tau_s_ns > 0:
            raise ConfigError(f"tau_s_ns must be > 0 (or null for no decay), got {self.tau_s_ns}")
        if not self.t_ns >= 0:
            raise ConfigError(f"t_ns must be >= 0, got {self.t_ns}")
        if not isinstance(self.mc, MCSettings):
            raise ConfigError("mc must be an MCSettings instance")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        if d["eta_M"] is None:
            del d["eta_M"]
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentSpec:
        if not isinstance(data, dict):
            raise ConfigError("experiment spec must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"_comment"}
        if unknown:
            raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
        kwargs = {k: v for k, v in data.items() if k in known}
        mc = kwargs.pop("mc", None) or {}
        if not isinstance(mc, dict):
            raise ConfigError("mc must be a JSON object")
        mc_known = {f.name for f in fields(MCSettings)}
        if set(mc) - mc_known:
            raise ConfigError(f"unknown mc keys: {sorted(set(mc) - mc_known)}")
        try:
            return cls(mc=MCSettings(**mc), **kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> ExperimentSpec:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> ExperimentSpec:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        return cls.from_json(text)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def with_mc(self, **changes: Any) -> ExperimentSpec:
        return replace(self, mc=replace(self.mc, **changes))

    @classmethod
    def symmetric(cls, r: float, eta_M: float, eta_read: float = 1.0,
                  excess_noise: float = 0.0, mc: MCSettings | None = None) -> ExperimentSpec:
        """Equal-parameter spec with a direct mapping-efficiency override."""
        return cls(r=(r,) * 3, eta_M=(eta_M,) * 3, eta_read=(eta_read,) * 3,
                   excess_noise=(excess_noise,) * 3, mc=mc or MCSettings())


def as_triple(values: float | Sequence[float], name: str = "value") -> tuple[float, float, float]:
    return _triple(values, name)
