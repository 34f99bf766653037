"""Agent views: what each decision maker is allowed to see.

A view is assembled during the revision stage of step ``t`` for decisions
that take effect from step ``t + 1``. Every field is read from completed
stages (``as_of <= t``), and the view records both stamps so the
information-causality rule can be checked mechanically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from ..markets import free_units, household_credit_limit, outstanding
from ..money import to_units
from ..state import EconomyState, FirmState, HouseholdState

MAX_LISTED_POSITIONS = 8
MAX_LISTED_HOMES = 5


@dataclass(frozen=True)
class AgentView:
    role: str
    agent_id: int
    as_of: int
    decision_step: int
    profile: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    observation: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.as_of >= self.decision_step:
            raise ValueError("a view may only carry information from before the decision step")

    def to_dict(self) -> dict:
        return {"role": self.role, "agent_id": self.agent_id, "as_of": self.as_of,
                "decision_step": self.decision_step, "profile": self.profile,
                "report": self.report, "observation": self.observation}

    def digest(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _u(cents) -> float:
    return round(to_units(int(cents)), 2)


def _q(units: float) -> float:
    return round(float(units), 4)


def posted_prices(state: EconomyState) -> list[int]:
    """Mean posted price per good over live sellers, else the reference price (cents)."""
    sums: dict[int, list[int]] = {}
    for f in state.firms.values():
        if f.kind != "residential":
            sums.setdefault(f.good, []).append(f.price)
    out = list(state.ref_prices)
    for g, ps in sums.items():
        out[g] = round(sum(ps) / len(ps))
    return out


def _names(state: EconomyState, goods: dict[int, float]) -> dict[str, float]:
    return {state.catalog[g].name: _q(u) for g, u in sorted(goods.items())}


def _trailing_income(hh: HouseholdState) -> float:
    hist = hh.income_history[-12:]
    return sum(hist) / len(hist) if hist else 0.0


def household_view(state: EconomyState, hh: HouseholdState) -> AgentView:
    t = state.step
    led = state.ledger
    prices = posted_prices(state)
    cat = state.catalog
    emp = None
    if hh.employment is not None:
        firm = state.firms.get(hh.employment.firm_id)
        emp = {"firm": hh.employment.firm_id, "position": hh.employment.position_id,
               "salary": _u(hh.employment.salary),
               "good": cat[firm.good].name if firm else None}
    home = None
    if hh.residence is not None:
        home = {"building": hh.residence, "rent": _u(hh.rent), "arrears_months": hh.arrears}
    top_skills = sorted(hh.skills.items(), key=lambda kv: (-kv[1], kv[0]))[:5]
    profile = {
        "id": hh.id, "name": hh.name, "age": hh.age,
        "top_skills": {k: round(v, 3) for k, v in top_skills},
        "cash": _u(led.balance(hh.cash_account)),
        "deposits": _u(led.balance(hh.deposit_account)),
        "loans": _u(outstanding(led, hh.loan_account)),
        "credit_limit": _u(household_credit_limit(hh)),
        "employment": emp, "home": home,
        "essential_needs": _names(state, hh.essential_needs),
        "additional_needs": _names(state, hh.additional_needs),
        "shares": {str(k): v for k, v in sorted(hh.shares.items())},
    }
    m = hh.month
    report = {
        "months_observed": len(hh.income_history[-12:]),
        "average_monthly_income": _u(_trailing_income(hh)),
        "last_month": {"salary": _u(m.salary), "dividend": _u(m.dividend), "interest": _u(m.interest),
                       "ubi": _u(m.ubi), "tax": _u(m.tax), "rent": _u(m.rent), "spend": _u(m.spend),
                       "food_spend": _u(m.food_spend)},
        "income_history": [_u(x) for x in hh.income_history[-12:]],
    }
    offer = None
    if hh.offer is not None:
        o = hh.offer
        f = state.firms.get(o.firm_id)
        offer = {"firm": o.firm_id, "position": o.position_id, "salary": _u(o.salary), "skill": o.skill,
                 "skill_level": round(hh.skills.get(o.skill, 0.0), 3),
                 "good": cat[f.good].name if f else None}
    openings = []
    for fid in sorted(state.firms):
        f = state.firms[fid]
        for p in f.vacancies():
            openings.append({"firm": fid, "good": cat[f.good].name, "skill": p.skill,
                             "salary": _u(p.salary), "your_level": round(hh.skills.get(p.skill, 0.0), 3)})
    openings.sort(key=lambda o: (-o["salary"], o["firm"], o["skill"]))
    homes = []
    for fid in sorted(state.firms):
        b = state.firms[fid]
        if b.kind == "residential" and free_units(b) > 0 and fid != hh.residence:
            homes.append({"building": fid, "rent": _u(b.price), "free_units": free_units(b),
                          "cell": list(b.location)})
    homes.sort(key=lambda h: (h["rent"], h["building"]))
    mk = state.market
    needed = sorted(set(hh.essential_needs) | set(hh.additional_needs))
    observation = {
        "prices": {cat[g].name: _u(prices[g]) for g in needed},
        "offer": offer,
        "open_positions": openings[:MAX_LISTED_POSITIONS],
        "open_position_count": len(openings),
        "unemployment": round(mk.get("unemployment", 0.0), 4),
        "deposit_rate": round(state.bank.rates.deposit, 6),
        "loan_rate": round(state.bank.rates.loan, 6),
        "average_roi": round(mk.get("roi", 0.0), 6),
        "inflation": mk.get("inflation"),
        "housing_offers": homes[:MAX_LISTED_HOMES],
        "unavailable_goods": sorted(cat[g].name for g in needed if not mk.get("sellers", {}).get(g)),
    }
    return AgentView("household", hh.id, t, t + 1, profile, report, observation)


def _capital_unit_price(state: EconomyState, prices: list[int]) -> int:
    durable = state.catalog.durable
    sellers = state.market.get("sellers", {})
    live = [prices[g] for g in durable if sellers.get(g)]
    return min(live) if live else min(prices[g] for g in durable)


def firm_view(state: EconomyState, firm: FirmState, capacity: float, labor: float,
              credit_limit: float) -> AgentView:
    t = state.step
    led = state.ledger
    cat = state.catalog
    prices = posted_prices(state)
    b = firm.book
    profile = {
        "id": firm.id, "kind": firm.kind, "good": cat[firm.good].name,
        "price": _u(firm.price), "cash": _u(led.balance(firm.cash_account)),
        "loans": _u(outstanding(led, firm.loan_account)), "credit_limit": _u(credit_limit),
        "capital": _q(firm.capital), "effective_labor": _q(labor), "tfp": firm.tfp, "alpha": firm.alpha,
        "stock": _q(firm.stock(firm.good)),
        "inputs": {cat[g].name: {"stock": _q(firm.stock(g)), "per_unit": _q(u)}
                   for g, u in sorted(firm.recipe.items())},
        "positions": [{"id": p.id, "skill": p.skill, "salary": _u(p.salary),
                       "occupant": p.occupant} for p in firm.positions],
        "units": firm.units, "tenants": len(firm.tenants),
    }
    spent = b.wage_bill + b.input_cost + b.capital_cost
    composition = ({"wages": round(b.wage_bill / spent, 4), "inputs": round(b.input_cost / spent, 4),
                    "capital": round(b.capital_cost / spent, 4)} if spent else
                   {"wages": 0.0, "inputs": 0.0, "capital": 0.0})
    profits = firm.profits[-12:]
    report = {
        "this_month": {"produced": _q(b.produced), "sold": _q(b.sold), "available": _q(b.available),
                       "capacity": _q(b.capacity), "revenue": _u(b.revenue), "wage_bill": _u(b.wage_bill),
                       "input_cost": _u(b.input_cost), "capital_cost": _u(b.capital_cost),
                       "tax": _u(b.tax), "dividends": _u(b.dividends)},
        "expenditure_composition": composition,
        "average_profit": _u(sum(profits) / len(profits)) if profits else 0.0,
        "max_production": _q(max(firm.production_history[-12:], default=0.0)),
    }
    mk = state.market
    g = firm.good
    vac_salaries = [p.salary for p in firm.positions]
    observation = {
        "market": {"good": cat[g].name, "demand": _q(mk.get("demand", {}).get(g, 0.0)),
                   "supply": _q(mk.get("supply", {}).get(g, 0.0)),
                   "sold": _q(mk.get("sold", {}).get(g, 0.0)),
                   "sellers": mk.get("sellers", {}).get(g, 0),
                   "mean_price": _u(prices[g])},
        "capacity": _q(capacity),
        "input_prices": {cat[i].name: _u(prices[i]) for i in sorted(firm.recipe)},
        "capital_price": _u(_capital_unit_price(state, prices)),
        "unemployment": round(mk.get("unemployment", 0.0), 4),
        "mean_salary": _u(sum(vac_salaries) / len(vac_salaries)) if vac_salaries else _u(mk.get("mean_salary", 0)),
        "deposit_rate": round(state.bank.rates.deposit, 6),
        "loan_rate": round(state.bank.rates.loan, 6),
        "occupancy": (round(len(firm.tenants) / firm.units, 4) if firm.units else None),
    }
    return AgentView("firm", firm.id, t, t + 1, profile, report, observation)


def government_view(state: EconomyState) -> AgentView:
    t = state.step
    gov = state.government
    mk = state.market
    profile = {
        "household_schedule": [[_u(b.threshold), b.rate] for b in gov.household_schedule],
        "firm_schedule": [[_u(b.threshold), b.rate] for b in gov.firm_schedule],
        "spending_plan": {"ubi": gov.ubi_share, "public": gov.public_share, "reserve": gov.reserve_share},
        "treasury": _u(state.ledger.balance("gov")), "public_fund": _u(gov.public_fund),
    }
    report = {"revenue_history": [_u(x) for x in gov.revenue_history[-12:]]}
    last = state.indicators[-1] if state.indicators else {}
    observation = {"unemployment": round(mk.get("unemployment", 0.0), 4),
                   "inflation": last.get("inflation"), "gini_income": last.get("gini_income"),
                   "gini_wealth": last.get("gini_wealth"), "population": len(state.households)}
    return AgentView("government", 0, t, t + 1, profile, report, observation)


def pool_view(state: EconomyState, balance: int, eligible: int) -> AgentView:
    t = state.step
    cat = state.catalog
    mk = state.market
    unmet = dict(mk.get("unmet", {}))
    unhoused = sum(1 for h in state.households.values() if h.residence is None)
    housing = cat.by_name("real_estate").id if "real_estate" in cat else None
    if housing is not None and unhoused:
        unmet[housing] = unmet.get(housing, 0.0) + unhoused
    templates = [{"template": tp.id, "good": cat[tp.good].name, "cost": _u(tp.founding_cost),
                  "headcount": tp.headcount} for tp in state.templates]
    profile = {"balance": _u(balance), "eligible": _u(eligible)}
    report = {"firms": len(state.firms)}
    observation = {"templates": templates,
                   "unmet_demand": {cat[g].name: _q(u) for g, u in sorted(unmet.items()) if u > 0},
                   "unhoused": unhoused}
    return AgentView("pool", 0, t, t + 1, profile, report, observation)


def view_fields_causal(view: AgentView) -> bool:
    return view.as_of < view.decision_step


def jsonable(obj: Any) -> Any:
    return json.loads(json.dumps(obj, sort_keys=True))
