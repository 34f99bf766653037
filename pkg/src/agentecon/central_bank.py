"""Annual Taylor-rule policy rate with interest-rate smoothing."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .state import BankState, RateSchedule

MIN_QUARTERS = 8


class InsufficientHistory(ValueError):
    pass


@dataclass(frozen=True)
class PolicyParams:
    natural_rate: float = 0.02
    target_inflation: float = 0.02
    inflation_response: float = 1.5
    output_response: float = 0.5
    smoothing: float = 0.8
    markup: float = 0.02

    def __post_init__(self):
        if not 0.0 <= self.smoothing < 1.0:
            raise ValueError("smoothing must lie in [0, 1)")
        if self.inflation_response < 0 or self.output_response < 0:
            raise ValueError("policy responses must be non-negative")
        if self.markup < 0:
            raise ValueError("loan markup must be non-negative")

    @property
    def neutral_rate(self) -> float:
        return self.natural_rate + self.target_inflation


def taylor_target(params: PolicyParams, inflation: float, output: float, potential: float) -> float:
    """Rate implied by the rule, floored at zero. The output gap enters as ``(Y - Yn) / Yn``."""
    if potential <= 0:
        raise ValueError("potential output must be positive")
    gap = (output - potential) / potential
    r = (params.natural_rate + params.target_inflation
         + params.inflation_response * (inflation - params.target_inflation)
         + params.output_response * gap)
    return max(r, 0.0)


def smooth_rate(previous: float, target: float, rho: float) -> float:
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    return rho * previous + (1.0 - rho) * target


def potential_output(history: Sequence[float], at: Optional[float] = None) -> float:
    """Linear OLS trend through ``history`` (one value per quarter) evaluated at index ``at``.

    ``at`` defaults to ``len(history)``, the period after the last observation.
    """
    y = np.asarray(history, dtype=float)
    if len(y) < MIN_QUARTERS:
        raise InsufficientHistory(f"need {MIN_QUARTERS} quarters, got {len(y)}")
    x = np.arange(len(y), dtype=float)
    xm, ym = x.mean(), y.mean()
    slope = float(((x - xm) * (y - ym)).sum() / ((x - xm) ** 2).sum())
    intercept = ym - slope * xm
    at = len(y) if at is None else at
    return intercept + slope * at


def annual_policy_update(bank: BankState, params: PolicyParams, step: int, development: bool,
                         inflation: Optional[float], quarterly_real_gdp: Sequence[float]) -> RateSchedule:
    """Reset the policy rate in the first month of each development-phase year.

    Off-cycle calls leave the schedule untouched. Missing inflation is read as
    on-target and a short GDP history as a zero output gap.
    """
    if step % 12 != 0 or not development:
        return bank.rates
    if bank.last_rate is None:
        bank.last_rate = params.neutral_rate
    pi = params.target_inflation if inflation is None else inflation
    if len(quarterly_real_gdp) >= MIN_QUARTERS and quarterly_real_gdp[-1] > 0:
        output = quarterly_real_gdp[-1]
        potential = potential_output(quarterly_real_gdp, at=len(quarterly_real_gdp) - 1)
        if potential <= 0:
            potential = output
    else:
        output = potential = 1.0
    target = taylor_target(params, pi, output, potential)
    rate = max(0.0, smooth_rate(bank.last_rate, target, params.smoothing))
    bank.last_rate = rate
    bank.rate_history.append((step, rate))
    bank.rates = RateSchedule.from_policy(rate, params.markup)
    return bank.rates
