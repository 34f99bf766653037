"""Mutable world state owned by the engine.

Cash, deposits and loans live in the :class:`~agentecon.ledger.Ledger`;
the agent dataclasses only carry account names and non-monetary state.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Any, Optional

from .ledger import Ledger

S_MIN = 0.5
S_MAX = 1.5

GOV = "gov"
BANK = "bank"
POOL = "pool"


@dataclass
class Employment:
    firm_id: int
    position_id: int
    salary: int


@dataclass
class Offer:
    firm_id: int
    position_id: int
    salary: int
    skill: str


@dataclass
class MonthBook:
    """Per-household flows for the current month, in cents."""
    salary: int = 0
    dividend: int = 0
    interest: int = 0
    ubi: int = 0
    tax: int = 0
    rent: int = 0
    spend: int = 0
    food_spend: int = 0
    essential_spend: int = 0
    invest: int = 0

    @property
    def gross_income(self) -> int:
        return self.salary + self.dividend + self.interest


@dataclass
class HouseholdState:
    id: int
    name: str
    age: int
    skills: dict[str, float]
    essential_needs: dict[int, float]
    additional_needs: dict[int, float]
    joined: int = 0
    employment: Optional[Employment] = None
    residence: Optional[int] = None
    rent: int = 0
    arrears: int = 0
    shares: dict[int, int] = field(default_factory=dict)
    offer: Optional[Offer] = None
    # consumption plan for the next trading stage: good -> units, with a budget cap
    plan: dict[int, float] = field(default_factory=dict)
    plan_budget: int = 0
    wants_move: bool = False
    max_rent: Optional[int] = None
    pending_invest: int = 0
    income_history: list[int] = field(default_factory=list)
    month: MonthBook = field(default_factory=MonthBook)
    carried_interest: int = 0
    loan_since: Optional[int] = None
    evicted_at: Optional[int] = None

    @property
    def labor(self) -> int:
        return 1 if self.employment is not None else 0

    @property
    def key(self) -> str:
        return f"hh:{self.id}"

    @property
    def cash_account(self) -> str:
        return f"hh:{self.id}"

    @property
    def deposit_account(self) -> str:
        return f"dep:hh:{self.id}"

    @property
    def loan_account(self) -> str:
        return f"loan:hh:{self.id}"


@dataclass
class Position:
    id: int
    skill: str
    salary: int
    occupant: Optional[int] = None
    pending_salary: Optional[int] = None
    posted_at: int = 0


@dataclass
class FirmBook:
    revenue: int = 0
    input_cost: int = 0
    capital_cost: int = 0
    wage_bill: int = 0
    tax: int = 0
    dividends: int = 0
    produced: float = 0.0
    sold: float = 0.0
    demanded: float = 0.0
    available: float = 0.0
    capacity: float = 0.0


@dataclass
class FirmState:
    id: int
    kind: str  # productive | residential | public
    template_id: int
    good: int
    tfp: float
    alpha: float
    recipe: dict[int, float]
    price: int
    location: tuple[int, int]
    shareholders: dict[str, int]
    dividend_rate: float = 0.02
    positions: list[Position] = field(default_factory=list)
    capital: float = 0.0
    inventory: dict[int, float] = field(default_factory=dict)
    profits: list[int] = field(default_factory=list)
    revenues: list[int] = field(default_factory=list)
    production_history: list[float] = field(default_factory=list)
    output_target: float = 0.0
    capital_order: float = 0.0
    units: int = 0  # rentable units (residential only)
    tenants: list[int] = field(default_factory=list)
    founded: int = 0
    loan_since: Optional[int] = None
    next_position_id: int = 0
    book: FirmBook = field(default_factory=FirmBook)
    last_book: FirmBook = field(default_factory=FirmBook)

    @property
    def key(self) -> str:
        return f"firm:{self.id}"

    @property
    def cash_account(self) -> str:
        return f"firm:{self.id}"

    @property
    def loan_account(self) -> str:
        return f"loan:firm:{self.id}"

    def stock(self, good: int) -> float:
        return self.inventory.get(good, 0.0)

    def vacancies(self) -> list[Position]:
        return [p for p in self.positions if p.occupant is None]

    def add_position(self, skill: str, salary: int, step: int = 0) -> Position:
        pos = Position(self.next_position_id, skill, salary, posted_at=step)
        self.next_position_id += 1
        self.positions.append(pos)
        return pos

    def position(self, pid: int) -> Position:
        for p in self.positions:
            if p.id == pid:
                return p
        raise KeyError(pid)


@dataclass
class TaxBracket:
    threshold: int  # lower bound, cents
    rate: float


@dataclass
class GovernmentState:
    household_schedule: list[TaxBracket]
    firm_schedule: list[TaxBracket]
    ubi_share: float = 0.5
    public_share: float = 0.0
    reserve_share: float = 0.5
    public_fund: int = 0  # earmarked part of the government account
    revenue_history: list[int] = field(default_factory=list)


@dataclass
class RateSchedule:
    policy: float
    deposit: float
    loan: float
    markup: float

    @classmethod
    def from_policy(cls, policy: float, markup: float) -> "RateSchedule":
        if policy < 0 or markup < 0:
            raise ValueError("rates must be non-negative")
        return cls(policy, policy, policy + markup, markup)


@dataclass
class BankState:
    rates: RateSchedule
    last_rate: Optional[float] = None
    rate_history: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class Contribution:
    owner: str
    amount: int
    step: int


@dataclass
class PoolState:
    contributions: list[Contribution] = field(default_factory=list)


@dataclass
class EconomyState:
    step: int
    households: dict[int, HouseholdState]
    firms: dict[int, FirmState]
    government: GovernmentState
    bank: BankState
    pool: PoolState
    city: Any  # spatial.CityMap
    ledger: Ledger
    rng: Any  # rng.RngTree
    ref_prices: list[int]  # list price per good, used where no firm posts one
    next_household_id: int = 0
    next_firm_id: int = 0
    base_prices: Optional[list[float]] = None
    base_step: Optional[int] = None
    indicators: list[dict] = field(default_factory=list)
    removed_firms: list[int] = field(default_factory=list)
    # last trading-stage summary per good: demand, supply, sold, unmet, price
    market: dict = field(default_factory=dict)
    catalog: Any = None  # static, excluded from the hash
    templates: list = field(default_factory=list)
    skills: list = field(default_factory=list)

    def cash(self, account: str) -> int:
        return self.ledger.balance(account)

    def firms_for_good(self, good: int) -> list[FirmState]:
        return [f for f in self.firms.values() if f.good == good and f.kind != "residential"]


def _canonical(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: _canonical(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


def state_hash(state: EconomyState) -> str:
    """SHA-256 over a canonical JSON rendering of the full state, ledger and RNG included."""
    payload = {
        "step": state.step,
        "households": _canonical(state.households),
        "firms": _canonical(state.firms),
        "government": _canonical(state.government),
        "bank": _canonical(state.bank),
        "pool": _canonical(state.pool),
        "city": state.city.to_dict(),
        "ledger": {
            "balances": _canonical(state.ledger.balances),
            "opening": _canonical(state.ledger.opening),
            "minted": state.ledger.minted,
            "log": [[t.txid, t.step, t.tag, [list(p) for p in t.postings]] for t in state.ledger.log],
        },
        "rng": state.rng.state_dict(),
        "ref_prices": state.ref_prices,
        "next": [state.next_household_id, state.next_firm_id],
        "base": [state.base_prices, state.base_step],
        "indicators": state.indicators,
        "removed": state.removed_firms,
        "market": _canonical(state.market),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()
