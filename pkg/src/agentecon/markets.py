"""Labor, goods, housing and financial markets."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .ledger import Ledger
from .money import Money, floor_cents, round_cents
from .state import (BANK, Employment, FirmState, HouseholdState, Offer, RateSchedule, S_MAX)

MICRO = 1e-6


class StaleOffer(ValueError):
    pass


class NotEmployed(ValueError):
    pass


class NotEmployer(ValueError):
    pass


class CreditLimitExceeded(ValueError):
    pass


class OverRepay(ValueError):
    pass


# ---------------------------------------------------------------------------
# labor


@dataclass(frozen=True)
class Vacancy:
    firm_id: int
    position_id: int
    skill: str
    salary: Money
    posted_at: int = 0


def open_vacancies(firms: Mapping[int, FirmState]) -> list[Vacancy]:
    out = []
    for fid in sorted(firms):
        for pos in firms[fid].positions:
            if pos.occupant is None and pos.salary > 0:
                out.append(Vacancy(fid, pos.id, pos.skill, pos.salary, pos.posted_at))
    return out


def match_probability(level: float, s_max: float = S_MAX) -> float:
    return min(1.0, max(0.0, level / s_max))


def match_labor(unemployed: Sequence[HouseholdState], vacancies: Sequence[Vacancy],
                rng: np.random.Generator, s_max: float = S_MAX) -> list[tuple[int, Vacancy]]:
    """Pair each unemployed household with at most one randomly drawn vacancy.

    Households go in seeded random order; each draws one still-unconsidered
    vacancy and is offered it with probability ``skill / s_max``. A vacancy is
    considered by at most one household per call.
    """
    for hh in unemployed:
        if hh.employment is not None:
            raise ValueError(f"household {hh.id} is employed")
    pool = list(vacancies)
    order = sorted(unemployed, key=lambda h: h.id)
    offers = []
    for idx in rng.permutation(len(order)):
        if not pool:
            break
        hh = order[int(idx)]
        vac = pool.pop(int(rng.integers(len(pool))))
        if rng.random() < match_probability(hh.skills.get(vac.skill, 0.0), s_max):
            offers.append((hh.id, vac))
    return offers


def accept_offer(hh: HouseholdState, firms: Mapping[int, FirmState]) -> Employment:
    offer = hh.offer
    if offer is None:
        raise StaleOffer(f"household {hh.id} holds no offer")
    firm = firms.get(offer.firm_id)
    if firm is None:
        raise StaleOffer(f"firm {offer.firm_id} no longer exists")
    try:
        pos = firm.position(offer.position_id)
    except KeyError:
        raise StaleOffer(f"position {offer.position_id} was removed") from None
    if pos.occupant is not None:
        raise StaleOffer(f"position {pos.id} at firm {firm.id} is taken")
    if hh.employment is not None:
        resign(hh, firms)
    pos.occupant = hh.id
    hh.employment = Employment(firm.id, pos.id, pos.salary)
    hh.offer = None
    return hh.employment


def reject_offer(hh: HouseholdState) -> None:
    if hh.offer is None:
        raise StaleOffer(f"household {hh.id} holds no offer")
    hh.offer = None


def resign(hh: HouseholdState, firms: Mapping[int, FirmState]) -> None:
    if hh.employment is None:
        raise NotEmployed(f"household {hh.id} is not employed")
    firm = firms.get(hh.employment.firm_id)
    if firm is not None:
        for pos in firm.positions:
            if pos.id == hh.employment.position_id and pos.occupant == hh.id:
                pos.occupant = None
    hh.employment = None


def layoff(firm: FirmState, hh: HouseholdState) -> None:
    if hh.employment is None or hh.employment.firm_id != firm.id:
        raise NotEmployer(f"firm {firm.id} does not employ household {hh.id}")
    pos = firm.position(hh.employment.position_id)
    pos.occupant = None
    hh.employment = None


def set_wage(firm: FirmState, position_id: int, salary: Money) -> None:
    """Schedule a salary change; it takes effect at the start of the next step."""
    if salary <= 0:
        raise ValueError("salary must be positive")
    try:
        firm.position(position_id).pending_salary = salary
    except KeyError:
        raise NotEmployer(f"firm {firm.id} has no position {position_id}") from None


def apply_pending_wages(firm: FirmState, households: Mapping[int, HouseholdState]) -> None:
    for pos in firm.positions:
        if pos.pending_salary is not None:
            pos.salary = pos.pending_salary
            pos.pending_salary = None
            if pos.occupant is not None and pos.occupant in households:
                emp = households[pos.occupant].employment
                if emp is not None:
                    emp.salary = pos.salary


def make_offer(hh: HouseholdState, vac: Vacancy) -> None:
    hh.offer = Offer(vac.firm_id, vac.position_id, vac.salary, vac.skill)


# ---------------------------------------------------------------------------
# goods


@dataclass
class GoodsOffer:
    seller: int
    good: int
    price: Money
    stock: float
    location: tuple[int, int]

    def __post_init__(self):
        if self.price <= 0:
            raise ValueError("offer price must be positive")


@dataclass
class GoodsDemand:
    buyer: str  # cash account of the buyer
    good: int
    units: float
    budget: Money
    essential: bool = False
    purpose: str = "consumption"  # consumption | input | capital
    location: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.units < 0 or self.budget < 0:
            raise ValueError("demand units and budget must be non-negative")


@dataclass(frozen=True)
class Trade:
    buyer: str
    seller: int
    good: int
    units: float
    price: Money
    value: Money
    purpose: str
    essential: bool

    def to_dict(self) -> dict:
        return {"buyer": self.buyer, "seller": self.seller, "good": self.good, "units": self.units,
                "price": self.price, "value": self.value, "purpose": self.purpose,
                "essential": self.essential}


@dataclass
class ClearingResult:
    trades: list[Trade] = field(default_factory=list)
    unmet: list[tuple[str, int, float, str]] = field(default_factory=list)  # buyer, good, units, purpose


def _distance(a, b) -> float:
    if a is None or b is None:
        return 0.0
    return math.hypot(a[0] - b[0], a[1] - b[1])


def clear_goods_market(offers: Sequence[GoodsOffer], demands: Sequence[GoodsDemand],
                       rng: np.random.Generator, ledger: Ledger, step: int = 0,
                       transport_cost: float = 0.0) -> ClearingResult:
    """Greedy cheapest-first clearing in two passes (essential demand first).

    Buyers go in seeded random order within each pass and fill each good from
    the cheapest living offer (ties: nearer seller, then lower seller id),
    taking ``min(desired, stock, affordable)``. Every fill is one zero-sum
    ledger transfer at the seller's posted price. Offer stocks are decremented
    in place. ``transport_cost`` > 0 ranks offers by price plus cost times
    distance; no money moves for it.
    """
    by_good: dict[int, list[GoodsOffer]] = {}
    for off in offers:
        by_good.setdefault(off.good, []).append(off)
    result = ClearingResult()
    for essential_pass in (True, False):
        mine = [d for d in demands if d.essential == essential_pass]
        buyers = sorted({d.buyer for d in mine})
        for idx in rng.permutation(len(buyers)):
            buyer = buyers[int(idx)]
            own = sorted((d for d in mine if d.buyer == buyer),
                         key=lambda d: (d.good, d.purpose))
            for dem in own:
                _fill(dem, by_good.get(dem.good, ()), ledger, step, transport_cost, result)
    return result


def _fill(dem: GoodsDemand, offers, ledger: Ledger, step: int, tau: float, result: ClearingResult) -> None:
    remaining = dem.units
    budget = dem.budget
    ranked = sorted(offers, key=lambda o: (o.price + tau * _distance(dem.location, o.location),
                                           _distance(dem.location, o.location), o.seller))
    for off in ranked:
        if remaining <= 1e-12 or budget <= 0:
            break
        if off.stock <= 1e-12:
            continue
        cash = ledger.balance(dem.buyer)
        money_cap = min(budget, cash) / off.price
        units = min(remaining, off.stock)
        if money_cap < units:
            units = math.floor(money_cap / MICRO) * MICRO
        if units <= 0:
            continue
        value = round_cents(Decimal(repr(float(units))) * off.price)
        if value <= 0:
            continue
        ledger.transfer(dem.buyer, f"firm:{off.seller}", value, "purchase", step,
                        good=dem.good, units=units, purpose=dem.purpose)
        off.stock = 0.0 if units == off.stock else off.stock - units
        remaining -= units
        budget -= value
        result.trades.append(Trade(dem.buyer, off.seller, dem.good, units, off.price, value,
                                   dem.purpose, dem.essential))
    if remaining > 1e-9:
        result.unmet.append((dem.buyer, dem.good, remaining, dem.purpose))


# ---------------------------------------------------------------------------
# housing


@dataclass
class HousingResult:
    assignments: list[tuple[int, int]] = field(default_factory=list)  # household, building
    unhoused: list[int] = field(default_factory=list)


def free_units(building: FirmState) -> int:
    return building.units - len(building.tenants)


def match_housing(seekers: Sequence[HouseholdState], buildings: Mapping[int, FirmState],
                  rng: np.random.Generator, ledger: Ledger,
                  workplace: Callable[[HouseholdState], Optional[tuple[int, int]]] = lambda h: None
                  ) -> HousingResult:
    """Assign each seeker the cheapest affordable free unit, seekers in seeded random order.

    Affordable means rent within the household's stated maximum (if any) and
    within its cash on hand. Ties go to the unit nearest the workplace, then
    the lower building id. A household that finds nothing keeps its current
    home, or stays unhoused.
    """
    order = sorted(seekers, key=lambda h: h.id)
    result = HousingResult()
    for idx in rng.permutation(len(order)):
        hh = order[int(idx)]
        cash = ledger.balance(hh.cash_account)
        work = workplace(hh)
        best = None
        for bid in sorted(buildings):
            b = buildings[bid]
            if b.kind != "residential" or bid == hh.residence or free_units(b) <= 0:
                continue
            if b.price > cash or (hh.max_rent is not None and b.price > hh.max_rent):
                continue
            key = (b.price, _distance(work, b.location) if work else 0.0, bid)
            if best is None or key < best[0]:
                best = (key, b)
        if best is None:
            if hh.residence is None:
                result.unhoused.append(hh.id)
            hh.wants_move = False
            continue
        b = best[1]
        if hh.residence is not None and hh.residence in buildings:
            old = buildings[hh.residence]
            if hh.id in old.tenants:
                old.tenants.remove(hh.id)
        b.tenants.append(hh.id)
        hh.residence = b.id
        hh.rent = b.price
        hh.arrears = 0
        hh.wants_move = False
        result.assignments.append((hh.id, b.id))
    return result


def collect_rent(households: Mapping[int, HouseholdState], buildings: Mapping[int, FirmState],
                 ledger: Ledger, step: int = 0, eviction_after: int = 2) -> tuple[list, list[int]]:
    """Charge monthly rent; two straight months of arrears evict the tenant.

    Returns ``(payments, evicted)`` where payments are ``(household, building, cents)``.
    """
    payments, evicted = [], []
    for hid in sorted(households):
        hh = households[hid]
        if hh.residence is None:
            continue
        b = buildings.get(hh.residence)
        if b is None:
            hh.residence, hh.rent = None, 0
            continue
        rent = hh.rent
        short = rent - ledger.balance(hh.cash_account)
        if short > 0:
            take = min(short, ledger.balance(hh.deposit_account))
            if take > 0:
                ledger.transfer(hh.deposit_account, hh.cash_account, take, "withdraw", step)
        if ledger.balance(hh.cash_account) >= rent:
            if rent > 0:
                ledger.transfer(hh.cash_account, b.cash_account, rent, "rent", step)
            hh.month.rent += rent
            hh.arrears = 0
            payments.append((hid, b.id, rent))
        else:
            hh.arrears += 1
            if hh.arrears >= eviction_after:
                if hid in b.tenants:
                    b.tenants.remove(hid)
                hh.residence, hh.rent, hh.arrears = None, 0, 0
                hh.evicted_at = step
                evicted.append(hid)
    return payments, evicted


# ---------------------------------------------------------------------------
# finance


def monthly_interest(balance: Money, annual_rate: float) -> Money:
    return round_cents(Decimal(balance) * Decimal(repr(float(annual_rate))) / 12)


def accrue_interest(ledger: Ledger, rates: RateSchedule, step: int = 0,
                    deposit_accounts: Optional[Iterable[str]] = None,
                    loan_accounts: Optional[Iterable[str]] = None) -> dict[str, Money]:
    """Mint monthly deposit interest and capitalize loan interest into principal.

    Returns interest per account (positive for deposits, loan interest as a
    positive amount added to the debt).
    """
    if deposit_accounts is None:
        deposit_accounts = [a for a in ledger.balances if a.startswith("dep:")]
    if loan_accounts is None:
        loan_accounts = [a for a in ledger.balances if a.startswith("loan:")]
    out: dict[str, Money] = {}
    for acct in sorted(deposit_accounts):
        bal = ledger.balance(acct)
        interest = monthly_interest(bal, rates.deposit) if bal > 0 else 0
        if interest > 0:
            ledger.mint_interest(acct, interest, step)
        out[acct] = interest
    for acct in sorted(loan_accounts):
        principal = -ledger.balance(acct)
        interest = monthly_interest(principal, rates.loan) if principal > 0 else 0
        if interest > 0:
            ledger.transfer(acct, BANK, interest, "loan-interest", step)
        out[acct] = interest
    return out


def outstanding(ledger: Ledger, loan_account: str) -> Money:
    return -ledger.balance(loan_account) if loan_account in ledger else 0


def borrow(ledger: Ledger, cash_account: str, loan_account: str, amount: Money, limit: float,
           step: int = 0):
    if amount < 0:
        raise ValueError("negative loan")
    if outstanding(ledger, loan_account) + amount > limit:
        raise CreditLimitExceeded(f"{cash_account}: {amount} on top of {outstanding(ledger, loan_account)}"
                                  f" exceeds limit {limit:.0f}")
    ledger.ensure(loan_account)
    return ledger.transfer(loan_account, cash_account, amount, "loan-issue", step)


def repay(ledger: Ledger, cash_account: str, loan_account: str, amount: Money, step: int = 0):
    if amount < 0:
        raise ValueError("negative repayment")
    if amount > outstanding(ledger, loan_account):
        raise OverRepay(f"{cash_account} repays {amount} of {outstanding(ledger, loan_account)}")
    return ledger.transfer(cash_account, loan_account, amount, "loan-repay", step)


def household_credit_limit(hh: HouseholdState, multiple: float = 3.0) -> float:
    hist = hh.income_history[-12:]
    return multiple * (sum(hist) / len(hist)) if hist else 0.0


def firm_credit_limit(value: float, fraction: float = 0.5) -> float:
    return max(0.0, fraction * value)


def affordable_units(budget: Money, price: Money) -> float:
    return floor_cents(budget) / price if price > 0 else 0.0
