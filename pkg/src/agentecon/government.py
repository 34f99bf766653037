"""Taxation, welfare spending and the macroeconomic indicator suite."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .ledger import Ledger
from .money import Money, floor_cents, round_cents, split_even
from .state import GOV, GovernmentState, HouseholdState, TaxBracket

DEFAULT_HOUSEHOLD_SCHEDULE = ((0.0, 0.10), (3000.0, 0.20), (8000.0, 0.30))
DEFAULT_FIRM_SCHEDULE = ((0.0, 0.10),)


class InvalidSchedule(ValueError):
    pass


class InvalidPlan(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class MissingBaseYear(RuntimeError):
    pass


def make_schedule(pairs: Iterable[Sequence[float]]) -> list[TaxBracket]:
    """Brackets from ``(threshold in currency units, rate)`` pairs."""
    from .money import to_cents
    sched = [TaxBracket(to_cents(b), float(r)) for b, r in pairs]
    validate_schedule(sched)
    return sched


def validate_schedule(schedule: Sequence[TaxBracket]) -> None:
    if not schedule:
        raise InvalidSchedule("empty schedule")
    if schedule[0].threshold != 0:
        raise InvalidSchedule("first bracket must start at 0")
    for lo, hi in zip(schedule, schedule[1:]):
        if hi.threshold <= lo.threshold:
            raise InvalidSchedule("thresholds must be strictly increasing")
    for b in schedule:
        if not 0.0 <= b.rate <= 1.0 or not math.isfinite(b.rate):
            raise InvalidSchedule(f"rate {b.rate} outside [0, 1]")


def bracketed_tax(schedule: Sequence[TaxBracket], base: Money) -> Money:
    """Marginal bracket tax on ``base`` cents, rounded half-to-even."""
    validate_schedule(schedule)
    if base <= 0:
        return 0
    total = Decimal(0)
    for k, bracket in enumerate(schedule):
        upper = schedule[k + 1].threshold if k + 1 < len(schedule) else None
        top = base if upper is None else min(base, upper)
        width = top - bracket.threshold
        if width > 0:
            total += Decimal(repr(float(bracket.rate))) * width
    return round_cents(total)


def _withdraw_for(ledger: Ledger, hh: HouseholdState, amount: Money, step: int) -> None:
    short = amount - ledger.balance(hh.cash_account)
    if short > 0:
        take = min(short, ledger.balance(hh.deposit_account))
        if take > 0:
            ledger.transfer(hh.deposit_account, hh.cash_account, take, "withdraw", step)


@dataclass
class TaxReport:
    revenue: Money = 0
    household: dict[int, Money] = field(default_factory=dict)
    firm: dict[int, Money] = field(default_factory=dict)
    unpaid: Money = 0


def collect_taxes(households: Mapping[int, HouseholdState], firms: Mapping, gov: GovernmentState,
                  ledger: Ledger, step: int = 0) -> TaxReport:
    """Income tax on gross monthly household income, VAT on firm value added (floored at 0)."""
    report = TaxReport()
    for hid in sorted(households):
        hh = households[hid]
        due = bracketed_tax(gov.household_schedule, hh.month.gross_income)
        if due <= 0:
            continue
        _withdraw_for(ledger, hh, due, step)
        paid = min(due, ledger.balance(hh.cash_account))
        if paid > 0:
            ledger.transfer(hh.cash_account, GOV, paid, "tax", step, base="income")
        hh.month.tax += paid
        report.household[hid] = paid
        report.unpaid += due - paid
        report.revenue += paid
    for fid in sorted(firms):
        firm = firms[fid]
        if firm.kind == "public":
            continue
        base = max(0, firm.book.revenue - firm.book.input_cost)
        due = bracketed_tax(gov.firm_schedule, base)
        if due <= 0:
            continue
        paid = min(due, ledger.balance(firm.cash_account))
        if paid > 0:
            ledger.transfer(firm.cash_account, GOV, paid, "tax", step, base="value-added")
        firm.book.tax += paid
        report.firm[fid] = paid
        report.unpaid += due - paid
        report.revenue += paid
    gov.revenue_history = (gov.revenue_history + [report.revenue])[-12:]
    return report


def validate_plan(ubi: float, public: float, reserve: float) -> None:
    shares = (ubi, public, reserve)
    if any(not math.isfinite(s) or s < 0 for s in shares) or sum(shares) > 1 + 1e-12:
        raise InvalidPlan(f"spending shares {shares} must be non-negative and sum to at most 1")


@dataclass
class SpendReport:
    ubi_each: Money = 0
    ubi_total: Money = 0
    public: Money = 0
    reserved: Money = 0


def spend(gov: GovernmentState, revenue: Money, households: Mapping[int, HouseholdState],
          ledger: Ledger, step: int = 0) -> SpendReport:
    """Split this month's revenue into UBI, the public-construction fund and reserves.

    UBI is split equally to the cent; leftover cents join the reserve. The
    public share is earmarked in ``gov.public_fund`` and spent when a public
    firm is founded.
    """
    validate_plan(gov.ubi_share, gov.public_share, gov.reserve_share)
    report = SpendReport()
    revenue = max(0, min(revenue, ledger.balance(GOV)))
    ubi_pot = floor_cents(Decimal(repr(float(gov.ubi_share))) * revenue)
    public = floor_cents(Decimal(repr(float(gov.public_share))) * revenue)
    each, _ = split_even(ubi_pot, len(households))
    if each > 0:
        for hid in sorted(households):
            hh = households[hid]
            ledger.transfer(GOV, hh.cash_account, each, "ubi", step)
            hh.month.ubi += each
    report.ubi_each = each
    report.ubi_total = each * len(households)
    gov.public_fund += public
    report.public = public
    report.reserved = revenue - report.ubi_total - public
    return report


def gini(values: Sequence[float]) -> float:
    """Gini coefficient of non-negative values (mean-difference form, 0 = equality)."""
    xs = sorted(float(v) for v in values)
    n = len(xs)
    if n < 2:
        raise DegenerateInput("need at least two values")
    if xs[0] < 0:
        raise DegenerateInput("values must be non-negative")
    total = math.fsum(xs)
    if total <= 0:
        raise DegenerateInput("values sum to zero")
    weighted = math.fsum(2 * (i + 1) * x for i, x in enumerate(xs))
    g = weighted / (n * total) - (n + 1) / n
    return min(max(g, 0.0), (n - 1) / n)


# ---------------------------------------------------------------------------
# indicators


@dataclass
class StepAccounts:
    """Raw per-step aggregates the engine hands to :func:`compute_indicators`.

    ``final_sales`` maps good -> (units, value cents) for household
    consumption (rent included as the housing good) and investment goods.
    """
    step: int
    phase: int
    consumption: Money
    investment: Money
    government: Money
    final_sales: dict[int, tuple[float, Money]]
    posted_prices: dict[int, Fraction]
    gov_price_good: int
    salaries: Money
    wealth: list[float]
    income: list[float]
    unemployed: int
    labor_force: int
    vacancies: int
    positions: int
    m0: Money
    deposits: Money
    production: dict[int, float]
    population: int
    firms: int
    supply: Money
    minted: Money
    policy_rate: float


@dataclass
class IndicatorFrame:
    step: int
    phase: int
    nominal_gdp: Money
    real_gdp: Optional[float]
    deflator: Optional[float]
    inflation: Optional[float]
    wage_inflation: Optional[float]
    gini_wealth: Optional[float]
    gini_income: Optional[float]
    equality: Optional[float]
    unemployment: float
    vacancy_rate: float
    m0: Money
    m1: Money
    consumption: Money
    investment: Money
    government: Money
    salaries: Money
    production: dict[int, float]
    population: int
    firms: int
    supply: Money
    minted: Money
    policy_rate: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["production"] = {str(k): v for k, v in sorted(self.production.items())}
        return d


def unit_price(acc: StepAccounts, good: int) -> Fraction:
    """Unit value of final sales of ``good`` this step, else its mean posted price."""
    units, value = acc.final_sales.get(good, (0.0, 0))
    if units > 0 and value > 0:
        return Fraction(value) / Fraction(units)
    return acc.posted_prices[good]


def base_prices_from(acc: StepAccounts, n_goods: int) -> list[Fraction]:
    return [unit_price(acc, g) for g in range(n_goods)]


def _real_gdp(acc: StepAccounts, base: Sequence[Fraction]) -> Fraction:
    real = sum((Fraction(units) * base[g] for g, (units, _) in acc.final_sales.items()), Fraction(0))
    if acc.government:
        g = acc.gov_price_good
        real += Fraction(acc.government) * base[g] / unit_price(acc, g)
    return real


def compute_indicators(acc: StepAccounts, base: Optional[Sequence[Fraction]],
                       prev: Optional[IndicatorFrame], require_base: bool = False) -> IndicatorFrame:
    if base is None and require_base:
        raise MissingBaseYear("base-year prices have not been fixed")
    nominal = acc.consumption + acc.investment + acc.government
    real = deflator = inflation = None
    if base is not None:
        real_f = _real_gdp(acc, base)
        if real_f > 0:
            real = float(real_f)
            deflator = float(Fraction(nominal) / real_f)
            if prev is not None and prev.deflator:
                inflation = deflator / prev.deflator - 1.0
    wage_inflation = None
    if prev is not None and prev.salaries > 0:
        wage_inflation = acc.salaries / prev.salaries - 1.0
    gw = gi = eq = None
    wealth = [max(0.0, w) for w in acc.wealth]
    n = len(acc.income)
    try:
        gw = gini(wealth)
    except DegenerateInput:
        pass
    try:
        gi = gini([max(0.0, x) for x in acc.income])
        eq = 1.0 - n / (n - 1) * gi
    except DegenerateInput:
        pass
    u = acc.unemployed / acc.labor_force if acc.labor_force else 0.0
    v = acc.vacancies / acc.positions if acc.positions else 0.0
    return IndicatorFrame(
        step=acc.step, phase=acc.phase, nominal_gdp=nominal, real_gdp=real, deflator=deflator,
        inflation=inflation, wage_inflation=wage_inflation, gini_wealth=gw, gini_income=gi,
        equality=eq, unemployment=u, vacancy_rate=v, m0=acc.m0, m1=acc.m0 + acc.deposits,
        consumption=acc.consumption, investment=acc.investment, government=acc.government,
        salaries=acc.salaries, production=dict(acc.production), population=acc.population,
        firms=acc.firms, supply=acc.supply, minted=acc.minted, policy_rate=acc.policy_rate,
    )
