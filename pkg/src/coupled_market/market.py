"""Domain types and the ceiling/matching arithmetic shared by every module.

A period's realized bookings are bounded by both latent demand and effective
supply.  Everything here is single-segment; series are float arrays where
period ``t`` (1-based) lives at index ``t - 1``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

SHOCK_TARGETS = ("demand_mean", "supply_intercept", "coupling_slope")
SHOCK_KINDS = {"demand_mean": "demand", "supply_intercept": "supply", "coupling_slope": "intervention"}
NOISE_KINDS = ("none", "additive", "multiplicative")


class ScenarioError(ValueError):
    """Raised when a scenario violates one or more invariants.

    ``problems`` holds every diagnostic, each prefixed by its field path.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class Ar1Params:
    mean: float
    persistence: float
    sd: float

    @property
    def stationary(self) -> bool:
        return abs(self.persistence) < 1.0

    @property
    def stationary_sd(self) -> float:
        return self.sd / math.sqrt(1.0 - self.persistence**2)


@dataclass(frozen=True)
class SupplyParams:
    intercept: float
    slope: float
    sd: float


@dataclass(frozen=True)
class ShockSpec:
    """Permanent parameter switch taking effect at period ``time``."""

    time: int
    target: str
    new_value: float
    kind: str = ""

    def __post_init__(self):
        if not self.kind and self.target in SHOCK_KINDS:
            object.__setattr__(self, "kind", SHOCK_KINDS[self.target])


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    sd: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        """Parse ``KIND:SD`` (e.g. ``additive:2``) or a bare ``none``."""
        kind, _, sd = text.partition(":")
        spec = cls(kind.strip(), float(sd) if sd else 0.0)
        problems = _noise_problems(spec, "noise")
        if problems:
            raise ScenarioError(problems)
        return spec

    def label(self) -> str:
        return "none" if self.kind == "none" else f"{self.kind}:{self.sd:g}"


@dataclass(frozen=True)
class ScenarioConfig:
    horizon: int = 200
    train_end: int = 150
    demand: Ar1Params = Ar1Params(50.0, 0.7, 5.0)
    supply: SupplyParams = SupplyParams(40.0, 0.3, 3.0)
    shocks: tuple[ShockSpec, ...] = (ShockSpec(151, "supply_intercept", 25.0),)
    matching_m: float = 1.0
    supply_noise: NoiseSpec = NoiseSpec()
    burn_in: int = 100
    seed: int = 20260101

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["shocks"] = [asdict(s) for s in self.shocks]
        return d

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioConfig":
        """Build from a parsed JSON document; unknown keys are errors.

        Top-level keys may be omitted (defaults apply); nested objects must be
        complete, except that a shock's ``kind`` is derived from its target.
        """
        problems: list[str] = []
        nested = {"demand": Ar1Params, "supply": SupplyParams, "supply_noise": NoiseSpec}
        top = _strict_keys(data, set(cls.__dataclass_fields__), "", problems)
        if top is None:
            raise ScenarioError(problems)
        for name, sub in nested.items():
            if name in top:
                _strict_keys(top[name], set(sub.__dataclass_fields__), name, problems)
        raw_shocks = top.get("shocks", [])
        if not isinstance(raw_shocks, list):
            problems.append("shocks: expected a list")
        else:
            for i, raw in enumerate(raw_shocks):
                _strict_keys(raw, set(ShockSpec.__dataclass_fields__), f"shocks[{i}]", problems)
        if problems:
            raise ScenarioError(problems)

        kwargs: dict[str, Any] = {k: v for k, v in top.items() if k not in nested and k != "shocks"}
        for name, sub in nested.items():
            if name in top:
                kwargs[name] = sub(**top[name])
        if "shocks" in top:
            kwargs["shocks"] = tuple(ShockSpec(**raw) for raw in raw_shocks)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"<document>: not valid JSON ({exc})"]) from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        return cls.from_json(Path(path).read_text())

    def with_noise(self, noise: NoiseSpec) -> "ScenarioConfig":
        return replace(self, supply_noise=noise)

    def without_shocks(self) -> "ScenarioConfig":
        return replace(self, shocks=())


def _strict_keys(raw: Any, allowed: set[str], path: str, problems: list[str]) -> dict | None:
    where = path or "<document>"
    if not isinstance(raw, dict):
        problems.append(f"{where}: expected an object")
        return None
    for key in sorted(set(raw) - allowed):
        problems.append(f"{path + '.' if path else ''}{key}: unknown field")
    if path:
        for key in sorted(allowed - set(raw) - {"kind"}):
            problems.append(f"{path}.{key}: missing field")
    return raw


@dataclass(frozen=True)
class MarketPath:
    """One simulated realization over periods 1..T."""

    D: np.ndarray
    S: np.ndarray
    S_obs: np.ndarray
    B: np.ndarray
    binding: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.B)

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self.B) + 1)

    def binding_fraction(self, start: int, end: int) -> float:
        return float(self.binding[start - 1:end].mean())

    def to_csv(self, path: str | Path) -> None:
        from .io import write_csv

        rows = (
            (t, d, s, so, b, int(bind))
            for t, d, s, so, b, bind in zip(
                self.t.tolist(), self.D.tolist(), self.S.tolist(), self.S_obs.tolist(),
                self.B.tolist(), self.binding.tolist(),
            )
        )
        write_csv(path, ("t", "D", "S", "S_obs", "B", "binding"), rows)

    @classmethod
    def from_csv(cls, path: str | Path) -> "MarketPath":
        from .io import read_csv_columns

        cols = read_csv_columns(path, ("t", "D", "S", "S_obs", "B", "binding"))
        return cls(cols["D"], cols["S"], cols["S_obs"], cols["B"], cols["binding"].astype(bool))


def _as_series(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def apply_ceiling(D, S, m: float = 1.0) -> np.ndarray:
    """Realized bookings ``m * min(D, S)``.

    Friction only shrinks volume: a negative ``min(D, S)`` (possible with
    Gaussian draws far from the benchmark calibration) passes through unscaled.
    """
    D = _as_series(D, "D")
    S = _as_series(S, "S")
    if D.shape != S.shape:
        raise ValueError(f"length mismatch: D has {len(D)}, S has {len(S)}")
    if not (0.0 < m <= 1.0):
        raise ValueError(f"matching efficiency out of range: {m}")
    base = np.minimum(D, S)
    return np.where(base > 0, m * base, base)


def matching_efficiency(B, D, S) -> np.ndarray:
    """Ratio ``B_t / min(D_t, S_t)``; raises on a non-positive denominator."""
    B, D, S = (np.asarray(x, dtype=float) for x in (B, D, S))
    if not (B.shape == D.shape == S.shape):
        raise ValueError("length mismatch")
    denom = np.minimum(D, S)
    bad = np.flatnonzero(~(denom > 0))
    if bad.size:
        raise ZeroDivisionError(f"min(D, S) <= 0 at t index {int(bad[0])}")
    return B / denom


def _num(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool) and math.isfinite(x)


def _int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def _noise_problems(noise: NoiseSpec, path: str) -> list[str]:
    out = []
    if noise.kind not in NOISE_KINDS:
        out.append(f"{path}.kind: unknown noise kind {noise.kind!r}")
    if not _num(noise.sd) or noise.sd < 0:
        out.append(f"{path}.sd: must be a finite number >= 0")
    return out


def scenario_problems(config: ScenarioConfig) -> list[str]:
    """Every invariant violation in ``config``; empty when valid."""
    p: list[str] = []
    T = config.horizon
    if not _int(T) or T < 1:
        p.append("horizon: must be a positive integer")
        T = None
    if not _int(config.train_end) or config.train_end < 1:
        p.append("train_end: must be a positive integer")
    elif T is not None and config.train_end >= T:
        p.append("train_end: must be < horizon")

    d = config.demand
    if not isinstance(d, Ar1Params):
        p.append("demand: expected Ar1Params")
    else:
        if not _num(d.mean):
            p.append("demand.mean: must be finite")
        if not _num(d.persistence):
            p.append("demand.persistence: must be finite")
        elif abs(d.persistence) >= 1:
            p.append("demand.persistence: persistence not stationary (|phi| must be < 1)")
        if not _num(d.sd) or d.sd < 0:
            p.append("demand.sd: must be a finite number >= 0")

    s = config.supply
    if not isinstance(s, SupplyParams):
        p.append("supply: expected SupplyParams")
    else:
        for name in ("intercept", "slope"):
            if not _num(getattr(s, name)):
                p.append(f"supply.{name}: must be finite")
        if not _num(s.sd) or s.sd < 0:
            p.append("supply.sd: must be a finite number >= 0")

    if not _num(config.matching_m) or not (0 < config.matching_m <= 1):
        p.append("matching_m: matching efficiency out of range (0, 1]")

    if isinstance(config.supply_noise, NoiseSpec):
        p.extend(_noise_problems(config.supply_noise, "supply_noise"))
    else:
        p.append("supply_noise: expected NoiseSpec")

    if not _int(config.burn_in) or config.burn_in < 0:
        p.append("burn_in: must be a nonnegative integer")
    if not _int(config.seed) or not (0 <= config.seed < 2**64):
        p.append("seed: must be an unsigned 64-bit integer")

    seen = set()
    for i, sh in enumerate(config.shocks if isinstance(config.shocks, (tuple, list)) else ()):
        where = f"shocks[{i}]"
        if not isinstance(sh, ShockSpec):
            p.append(f"{where}: expected ShockSpec")
            continue
        if not _int(sh.time) or (T is not None and not (1 <= sh.time <= T)):
            p.append(f"{where}.time: must be an integer in [1, horizon]")
        if sh.target not in SHOCK_TARGETS:
            p.append(f"{where}.target: unknown target {sh.target!r}")
        elif sh.kind != SHOCK_KINDS[sh.target]:
            p.append(f"{where}.kind: {sh.kind!r} inconsistent with target {sh.target!r}")
        if not _num(sh.new_value):
            p.append(f"{where}.new_value: must be finite")
        key = (sh.time, sh.target)
        if key in seen:
            p.append(f"{where}: duplicate shock for (time, target) = {key}")
        seen.add(key)
    if not isinstance(config.shocks, (tuple, list)):
        p.append("shocks: expected a list")
    return p


def validate_scenario(config: ScenarioConfig) -> ScenarioConfig:
    """Return ``config`` unchanged, or raise :class:`ScenarioError` listing all violations."""
    problems = scenario_problems(config)
    if problems:
        raise ScenarioError(problems)
    return config


def prevailing(base: float, shocks: Sequence[ShockSpec], target: str, T: int) -> np.ndarray:
    """Per-period parameter value over 1..T after applying permanent switches."""
    values = np.full(T, float(base))
    for sh in sorted((s for s in shocks if s.target == target), key=lambda s: s.time):
        values[sh.time - 1:] = sh.new_value
    return values
