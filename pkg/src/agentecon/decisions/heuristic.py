"""Deterministic rule-based decisions, a stand-in for the language model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actions import Action, ActionSet
from .views import AgentView


@dataclass(frozen=True)
class HeuristicParams:
    additional_spend: float = 0.10  # share of cash left after essentials and rent
    cash_buffer_months: float = 2.0
    invest_share: float = 0.10  # of savings above the buffer
    price_step: float = 0.05
    low_sales: float = 0.5
    output_headroom: float = 1.1
    capital_per_worker: float = 3.0
    payroll_cover: float = 2.0
    repay_above: float = 6.0
    tight_labor: float = 0.10
    wage_step: float = 0.05


def _r2(x: float) -> float:
    return round(float(x), 2)


def household_rules(view: AgentView, p: HeuristicParams) -> list[Action]:
    prof, obs, rep = view.profile, view.observation, view.report
    prices = obs["prices"]
    cash = prof["cash"]
    ess = prof["essential_needs"]
    add = prof["additional_needs"]
    ess_cost = sum(u * prices[g] for g, u in ess.items())
    if prof["home"] is not None:
        rent = prof["home"]["rent"]
    else:
        rent = obs["housing_offers"][0]["rent"] if obs["housing_offers"] else 0.0
    liquid = cash + prof["deposits"]
    remaining = max(0.0, liquid - ess_cost - rent)
    add_cost = sum(u * prices[g] for g, u in add.items())
    add_budget = min(p.additional_spend * remaining, add_cost)
    scale = add_budget / add_cost if add_cost > 0 else 0.0
    goods = dict(ess)
    for g, u in add.items():
        goods[g] = round(goods.get(g, 0.0) + u * scale, 4)
    actions = [Action("set_consumption", {"budget": _r2(ess_cost + add_budget), "goods": goods})]

    offer = obs["offer"]
    if offer is not None:
        emp = prof["employment"]
        take = emp is None or offer["salary"] >= emp["salary"]
        actions.append(Action("labor_action", {"action": "accept" if take else "reject"}))

    if prof["home"] is None:
        actions.append(Action("housing_action", {"action": "move"}))

    # keep a cash buffer for next month's plan; surplus repays debt, then part of
    # liquid savings goes to the pool and the rest of the cash to deposits
    month_need = ess_cost + rent + add_budget
    keep = p.cash_buffer_months * month_need
    excess = cash - keep
    fin: dict[str, float] = {}
    if excess > 0 and prof["loans"] > 0:
        pay = min(prof["loans"], excess)
        fin["repay"] = _r2(pay)
        excess -= pay
    savings = liquid - keep - fin.get("repay", 0.0)
    roi = obs["average_roi"]
    if savings > 0 and prof["loans"] <= fin.get("repay", 0.0) and (
            roi > obs["deposit_rate"] or obs["unavailable_goods"]):
        fin["invest"] = _r2(p.invest_share * savings)
        excess -= fin["invest"]
    if excess > 0:
        fin["deposit"] = _r2(excess)
    elif excess < 0:
        take = min(prof["deposits"], -excess)
        if take > 0:
            fin["withdraw"] = _r2(take)
        gap = ess_cost + rent - cash - take
        room = prof["credit_limit"] - prof["loans"]
        if gap > 0 and room > 0:
            fin["borrow"] = _r2(min(room, gap))
    fin = {k: v for k, v in fin.items() if v > 0}
    if fin:
        actions.append(Action("financial_action", fin))
    return actions


def firm_rules(view: AgentView, p: HeuristicParams, rng: np.random.Generator) -> list[Action]:
    prof, obs, rep = view.profile, view.observation, view.report
    last = rep["this_month"]
    price = prof["price"]
    if prof["kind"] == "residential":
        occ = obs["occupancy"]
        if occ is not None and occ >= 1.0:
            price *= 1 + p.price_step
        elif occ is not None and occ < p.low_sales:
            price *= 1 - p.price_step
        return [Action("set_output_and_price", {"price": max(0.01, _r2(price))})]

    available, sold = last["available"], last["sold"]
    if available > 0 and sold >= available - 1e-6:
        price *= 1 + p.price_step
    elif available > 0 and sold < p.low_sales * available:
        price *= 1 - p.price_step
    mk = obs["market"]
    share = mk["demand"] / mk["sellers"] if mk["sellers"] else obs["capacity"]
    target = max(1.0, p.output_headroom * share - prof["stock"])
    actions = [Action("set_output_and_price", {"output": round(target, 4), "price": max(0.01, _r2(price))})]

    positions = prof["positions"]
    filled = [q for q in positions if q["occupant"] is not None]
    vacant = [q for q in positions if q["occupant"] is None]
    payroll = sum(q["salary"] for q in filled)
    labor = {}
    invest = {}
    cap = obs["capacity"]
    L, K = prof["effective_labor"], prof["capital"]
    if cap < target:
        if L <= 0 or K / L >= p.capital_per_worker:
            if not vacant:
                skills = sorted({q["skill"] for q in positions}) or ["general"]
                skill = skills[int(rng.integers(len(skills)))]
                salary = obs["mean_salary"] or 1.0
                labor["post"] = [{"skill": skill, "salary": _r2(salary)}]
        else:
            want = (target / (prof["tfp"] * L ** (1 - prof["alpha"]))) ** (1 / prof["alpha"]) - K
            spare = max(0.0, prof["cash"] - p.payroll_cover * payroll)
            afford = 0.5 * spare / obs["capital_price"] if obs["capital_price"] > 0 else 0.0
            units = min(want, afford, max(1.0, 0.25 * K))
            if units > 0 and math.isfinite(units):
                invest["capital_units"] = round(units, 4)
    elif len(filled) > 1 and prof["stock"] > 3 * max(share, 1.0):
        labor["layoff"] = [max(filled, key=lambda q: q["id"])["occupant"]]
    if vacant and obs["unemployment"] < p.tight_labor:
        labor["set_wage"] = [{"position": q["id"], "salary": _r2(q["salary"] * (1 + p.wage_step))}
                             for q in vacant]
    if labor:
        actions.append(Action("labor_actions", labor))

    cash, loans = prof["cash"], prof["loans"]
    room = prof["credit_limit"] - loans
    if cash < p.payroll_cover * payroll and room > 0:
        invest["borrow"] = _r2(min(room, p.payroll_cover * payroll - cash))
    elif loans > 0 and cash > p.repay_above * payroll:
        invest["repay"] = _r2(min(loans, cash - p.repay_above * payroll))
    invest = {k: v for k, v in invest.items() if v > 0}
    if invest:
        actions.append(Action("investment_action", invest))
    return actions


def government_rules(view: AgentView) -> list[Action]:
    return [Action("set_spending_plan", {"ubi": 0.5, "public": 0.0, "reserve": 0.5})]


def pool_rules(view: AgentView) -> list[Action]:
    eligible = view.profile["eligible"]
    unmet = view.observation["unmet_demand"]
    options = [t for t in view.observation["templates"] if t["cost"] <= eligible and unmet.get(t["good"], 0) > 0]
    if not options:
        return [Action("wait", {})]
    best = max(options, key=lambda t: (unmet[t["good"]], -t["cost"], -t["template"]))
    return [Action("found_firm", {"template": best["template"]})]


def heuristic_decide(view: AgentView, role: str, rng: np.random.Generator,
                     params: HeuristicParams = HeuristicParams()) -> ActionSet:
    """Rule-table decision for one agent; a pure function of (view, rng state)."""
    if role != view.role:
        raise ValueError(f"view is for {view.role}, not {role}")
    if role == "household":
        acts = household_rules(view, params)
    elif role == "firm":
        acts = firm_rules(view, params, rng)
    elif role == "government":
        acts = government_rules(view)
    elif role == "pool":
        acts = pool_rules(view)
    else:
        acts = []
    return ActionSet(role, view.agent_id, tuple(acts))
