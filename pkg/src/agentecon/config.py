"""Run configuration and scenarios, loadable from YAML."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .central_bank import PolicyParams
from .decisions.actions import Guardrails
from .decisions.backends import ChatConfig
from .decisions.heuristic import HeuristicParams
from .government import (DEFAULT_FIRM_SCHEDULE, DEFAULT_HOUSEHOLD_SCHEDULE, InvalidSchedule,
                         make_schedule)

BACKENDS = ("heuristic", "remote", "replay")
SCENARIO_KINDS = ("price-impulse-up", "price-impulse-down", "none")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    kind: str = "none"
    trigger: int = 0
    goods: int = 7
    magnitude: Optional[float] = None  # default +0.5 up, -0.5 down

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if self.magnitude is not None and not self.magnitude > -1.0:
            raise ConfigError("shock magnitude must exceed -1")
        if self.goods < 0:
            raise ConfigError("good count must be non-negative")

    @property
    def factor(self) -> float:
        if self.kind == "none":
            return 1.0
        m = self.magnitude
        if m is None:
            m = 0.5 if self.kind == "price-impulse-up" else -0.5
        return 1.0 + m


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    max_population: int = 200
    initial_households: int = 20
    phase1_steps: int = 36
    phase2_steps: int = 144
    arrival_rate: Optional[float] = None  # households per step; None spreads the cap over phase 1
    arrival_schedule: Optional[tuple[int, ...]] = None  # explicit arrivals per phase-1 step
    grid_width: int = 60
    grid_height: int = 60
    initial_price: float = 50.0
    default_wage: float = 3000.0
    founding_months: int = 12
    seed_goods: Optional[tuple[str, ...]] = None  # default: the essential goods
    units_per_building: int = 10
    initial_capital: float = 10.0
    startup_input_months: float = 6.0
    dividend_rate: float = 0.02
    eviction_after: int = 2
    household_credit_multiple: float = 3.0
    firm_credit_fraction: float = 0.5
    transport_cost: float = 0.0
    income_mu: float = 11.1496
    income_sigma2: float = 1.1455
    essential_need: tuple[float, float] = (0.5, 2.0)
    additional_need: tuple[float, float] = (0.0, 4.0)
    household_tax: tuple[tuple[float, float], ...] = DEFAULT_HOUSEHOLD_SCHEDULE
    firm_tax: tuple[tuple[float, float], ...] = DEFAULT_FIRM_SCHEDULE
    ubi_share: float = 0.5
    public_share: float = 0.0
    reserve_share: float = 0.5
    policy: PolicyParams = field(default_factory=PolicyParams)
    guardrails: Guardrails = field(default_factory=Guardrails)
    heuristic: HeuristicParams = field(default_factory=HeuristicParams)
    backend: str = "heuristic"
    placement: str = "heuristic"  # heuristic | remote
    chat: ChatConfig = field(default_factory=ChatConfig)
    scenarios: tuple[Scenario, ...] = ()
    out_dir: Optional[str] = None
    trace_trades: bool = True
    trace_agents: bool = True
    snapshot_every: int = 0  # SVG map snapshots; 0 disables

    @property
    def total_steps(self) -> int:
        return self.phase1_steps + self.phase2_steps

    def validate(self) -> "RunConfig":
        if self.phase1_steps <= 0 or self.phase2_steps < 0:
            raise ConfigError("phase 1 must be positive and phase 2 non-negative")
        if self.max_population <= 0 or not 0 <= self.initial_households <= self.max_population:
            raise ConfigError("need 0 <= initial households <= max population, max > 0")
        if self.grid_width <= 0 or self.grid_height <= 0:
            raise ConfigError("grid dimensions must be positive")
        if self.initial_price <= 0 or self.default_wage <= 0:
            raise ConfigError("initial price and default wage must be positive")
        if self.units_per_building <= 0:
            raise ConfigError("units per building must be positive")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        if self.placement not in ("heuristic", "remote"):
            raise ConfigError("placement must be heuristic or remote")
        if self.backend == "replay" and not self.chat.replay_path:
            raise ConfigError("replay backend needs chat.replay_path")
        if self.arrival_rate is not None and self.arrival_rate < 0:
            raise ConfigError("arrival rate must be non-negative")
        if self.arrival_schedule is not None and any(a < 0 for a in self.arrival_schedule):
            raise ConfigError("arrival schedule entries must be non-negative")
        try:
            make_schedule(self.household_tax)
            make_schedule(self.firm_tax)
        except InvalidSchedule as exc:
            raise ConfigError(f"invalid tax schedule: {exc}") from exc
        shares = (self.ubi_share, self.public_share, self.reserve_share)
        if any(s < 0 for s in shares) or sum(shares) > 1 + 1e-12:
            raise ConfigError("spending shares must be non-negative and sum to at most 1")
        for sc in self.scenarios:
            if sc.kind != "none" and not 0 <= sc.trigger < self.total_steps:
                raise ConfigError(f"scenario trigger {sc.trigger} outside the run (0..{self.total_steps - 1})")
        if self.essential_need[0] < 0 or self.essential_need[1] < self.essential_need[0]:
            raise ConfigError("bad essential need range")
        if self.additional_need[0] < 0 or self.additional_need[1] < self.additional_need[0]:
            raise ConfigError("bad additional need range")
        return self

    def arrivals_at(self, step: int, population: int) -> int:
        """Households arriving at ``step`` given the current population."""
        if step >= self.phase1_steps:
            return 0
        room = self.max_population - population
        if room <= 0:
            return 0
        if self.arrival_schedule is not None:
            n = self.arrival_schedule[step] if step < len(self.arrival_schedule) else 0
        else:
            rate = self.arrival_rate
            if rate is None:
                rate = (self.max_population - self.initial_households) / self.phase1_steps
            n = int((step + 1) * rate + 1e-9) - int(step * rate + 1e-9)
        return min(n, room)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _tuplify(v: Any) -> Any:
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


_NESTED = {"policy": PolicyParams, "guardrails": Guardrails, "heuristic": HeuristicParams, "chat": ChatConfig}


def config_from_dict(data: dict) -> RunConfig:
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    try:
        for key, value in data.items():
            if key in _NESTED:
                cls = _NESTED[key]
                sub_known = {f.name for f in dataclasses.fields(cls)}
                bad = set(value or {}) - sub_known
                if bad:
                    raise ConfigError(f"unknown keys in {key}: {sorted(bad)}")
                kwargs[key] = cls(**{k: _tuplify(v) for k, v in (value or {}).items()})
            elif key == "scenarios":
                kwargs[key] = tuple(Scenario(**s) for s in (value or []))
            else:
                kwargs[key] = _tuplify(value)
        return RunConfig(**kwargs).validate()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    return config_from_dict(data)


def desk_config(**overrides) -> RunConfig:
    """Small run: 20 households, the six essential seed firms, 36 steps."""
    base = dict(max_population=20, initial_households=20, phase1_steps=12, phase2_steps=24,
                grid_width=20, grid_height=20)
    base.update(overrides)
    return RunConfig(**base).validate()
