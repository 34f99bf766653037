"""Building the initial economy and adding agents to it."""
from __future__ import annotations

import dataclasses
import math
from decimal import Decimal
from typing import Optional

import numpy as np

from .catalog import load_age_table, load_goods, load_skills
from .central_bank import PolicyParams
from .config import ConfigError, RunConfig
from .decisions.pool import place_building
from .decisions.views import posted_prices
from .government import make_schedule
from .ledger import Ledger
from .markets import accept_offer, make_offer, match_housing, match_labor, open_vacancies
from .money import round_cents, to_cents
from .production import FirmTemplate, capacity, load_templates
from .rng import RngTree
from .spatial import Building, CityMap
from .state import (BANK, GOV, POOL, S_MAX, S_MIN, BankState, EconomyState, FirmState, GovernmentState,
                    HouseholdState, PoolState, RateSchedule)

REAL_ESTATE = "real_estate"
CONSTRUCTION = "construction"


def sample_initial_cash(gen: np.random.Generator, n: int, mu: float = 11.1496,
                        sigma2: float = 1.1455) -> np.ndarray:
    """Initial money holdings in currency units, with ln m ~ Normal(mu, sigma2)."""
    return np.exp(gen.normal(mu, math.sqrt(sigma2), size=n))


def sample_age(gen: np.random.Generator, bins, weights) -> int:
    k = int(gen.choice(len(bins), p=np.asarray(weights) / np.sum(weights)))
    lo, hi = bins[k]
    return int(gen.integers(lo, hi + 1))


def add_household(state: EconomyState, config: RunConfig, gen: np.random.Generator,
                  skills: list[str], ages) -> HouseholdState:
    """Draw a new household and open its accounts; its cash is a fresh endowment."""
    hid = state.next_household_id
    state.next_household_id += 1
    cat = state.catalog
    cash = to_cents(float(sample_initial_cash(gen, 1, config.income_mu, config.income_sigma2)[0]))
    age = sample_age(gen, *ages)
    levels = gen.uniform(S_MIN, S_MAX, size=len(skills))
    ess_lo, ess_hi = config.essential_need
    add_lo, add_hi = config.additional_need
    essential = {g: round(float(u), 4) for g, u in zip(cat.essential, gen.uniform(ess_lo, ess_hi, len(cat.essential)))}
    additional = {g: round(float(u), 4)
                  for g, u in zip(cat.consumer, gen.uniform(add_lo, add_hi, len(cat.consumer)))}
    additional = {g: u for g, u in additional.items() if u > 0}
    hh = HouseholdState(id=hid, name=f"H{hid:04d}", age=age,
                        skills={s: float(v) for s, v in zip(skills, levels)},
                        essential_needs=essential, additional_needs=additional, joined=state.step)
    prices = posted_prices(state)
    hh.plan = dict(essential)
    hh.plan_budget = round_cents(sum(Decimal(repr(float(u))) * prices[g] for g, u in essential.items()))
    state.ledger.open(hh.cash_account, cash)
    state.ledger.open(hh.deposit_account)
    state.ledger.open(hh.loan_account)
    state.households[hid] = hh
    return hh


def startup_inventory(template: FirmTemplate, tfp: float, capital: float, months: float) -> dict[int, float]:
    """Inputs for ``months`` of production at full staffing with average skill."""
    if not template.recipe or months <= 0:
        return {}
    labor = float(template.headcount)
    monthly = tfp * labor ** (1 - template.alpha) * capital ** template.alpha if capital > 0 else 0.0
    return {g: round(units * monthly * months, 6) for g, units in sorted(template.recipe.items())}


def found_firm(state: EconomyState, config: RunConfig, template: FirmTemplate, owners: dict[str, int],
               kind: str, cell: tuple[int, int], source: Optional[str] = None, tag: str = "found",
               endow: Optional[int] = None) -> FirmState:
    """Create a firm from ``template`` at ``cell``.

    With ``source`` the founding cost moves from that account to the firm;
    otherwise the firm's opening cash is an endowment (``endow`` cents,
    default the founding cost). Residential buildings have rentable units
    and no staff.
    """
    fid = state.next_firm_id
    state.next_firm_id += 1
    prices = posted_prices(state)
    residential = kind == "residential"
    capital = 0.0 if residential else config.initial_capital
    firm = FirmState(
        id=fid, kind=kind, template_id=template.id, good=template.good, tfp=template.tfp, alpha=template.alpha,
        recipe={} if residential else dict(template.recipe), price=prices[template.good],
        location=tuple(cell), shareholders=dict(sorted(owners.items())), dividend_rate=config.dividend_rate,
        capital=capital, founded=state.step, units=config.units_per_building if residential else 0,
    )
    if not residential:
        wage = to_cents(config.default_wage)
        for skill, headcount in template.positions:
            for _ in range(headcount):
                firm.add_position(skill, wage, state.step)
        firm.inventory = startup_inventory(template, template.tfp, capital, config.startup_input_months)
        firm.output_target = capacity_at_full(template, capital)
    cost = template.founding_cost
    if source is None:
        state.ledger.open(firm.cash_account, cost if endow is None else endow)
    else:
        state.ledger.open(firm.cash_account)
        state.ledger.transfer(source, firm.cash_account, cost, tag, state.step, firm=fid)
    state.ledger.open(firm.loan_account)
    state.city.occupy(tuple(cell), Building(fid, kind, firm.cash_account, tuple(cell)))
    state.firms[fid] = firm
    for owner, units in owners.items():
        if owner.startswith("hh:"):
            hh = state.households.get(int(owner[3:]))
            if hh is not None:
                hh.shares[fid] = hh.shares.get(fid, 0) + units
    return firm


def capacity_at_full(template: FirmTemplate, capital: float) -> float:
    if capital <= 0 or template.headcount == 0:
        return 0.0
    return template.tfp * float(template.headcount) ** (1 - template.alpha) * capital ** template.alpha


def building_kind(state: EconomyState, template: FirmTemplate) -> str:
    return "residential" if state.catalog[template.good].name == REAL_ESTATE else "productive"


def population_centroid(state: EconomyState) -> Optional[tuple[float, float]]:
    pts = [state.firms[h.residence].location for h in state.households.values()
           if h.residence is not None and h.residence in state.firms]
    if not pts:
        return None
    return (sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts))


def supply_closure(goods, templates) -> list[int]:
    """``goods`` plus every good reachable through recipe inputs, sorted."""
    by_good = {t.good: t for t in templates}
    seen, todo = set(), list(goods)
    while todo:
        g = todo.pop()
        if g in seen:
            continue
        seen.add(g)
        if g in by_good:
            todo.extend(by_good[g].recipe)
    return sorted(seen)


def load_static(config: RunConfig):
    cat = load_goods()
    skills = load_skills()
    templates = load_templates(None, cat, skills)
    wage = to_cents(config.default_wage)
    templates = [dataclasses.replace(t, founding_cost=config.founding_months * t.headcount * wage)
                 for t in templates]
    return cat, skills, templates


def init_world(config: RunConfig, rng: Optional[RngTree] = None) -> EconomyState:
    config.validate()
    rng = rng or RngTree(config.seed)
    cat, skills, templates = load_static(config)
    ages = load_age_table()
    n_goods = len(cat)
    ledger = Ledger()
    for acct in (GOV, BANK, POOL):
        ledger.open(acct)
    policy: PolicyParams = config.policy
    gov = GovernmentState(make_schedule(config.household_tax), make_schedule(config.firm_tax),
                          config.ubi_share, config.public_share, config.reserve_share)
    bank = BankState(RateSchedule.from_policy(policy.neutral_rate, policy.markup), last_rate=policy.neutral_rate)
    state = EconomyState(step=0, households={}, firms={}, government=gov, bank=bank, pool=PoolState(),
                         city=CityMap(config.grid_width, config.grid_height), ledger=ledger, rng=rng,
                         ref_prices=[to_cents(config.initial_price)] * n_goods, catalog=cat, templates=templates,
                         skills=skills)
    gen = rng["init"]
    for _ in range(config.initial_households):
        add_household(state, config, gen, skills, ages)

    if config.seed_goods is None:
        seed_goods = supply_closure(cat.essential, templates)
    else:
        try:
            seed_goods = [cat.by_name(name).id for name in config.seed_goods]
        except KeyError as exc:
            raise ConfigError(f"unknown seed good {exc}") from exc
    by_good = {t.good: t for t in templates}
    owners = {hh.key: 1 for hh in state.households.values()} or {GOV: 1}
    n_buildings = math.ceil(config.max_population / config.units_per_building)
    housing = by_good[cat.by_name(REAL_ESTATE).id]
    needed = n_buildings + len(seed_goods)
    if needed > config.grid_width * config.grid_height:
        raise ConfigError("grid too small for the seed buildings")
    for _ in range(n_buildings):
        cell = place_building(state.city, "residential")
        found_firm(state, config, housing, owners, "residential", cell, endow=0)
    for g in seed_goods:
        cell = place_building(state.city, "productive")
        found_firm(state, config, by_good[g], owners, "productive", cell)

    # initial hiring and housing so the first month produces and pays rent
    unemployed = [h for _, h in sorted(state.households.items())]
    for hid, vac in match_labor(unemployed, open_vacancies(state.firms), gen, S_MAX):
        hh = state.households[hid]
        make_offer(hh, vac)
        accept_offer(hh, state.firms)
    seekers = [h for _, h in sorted(state.households.items())]
    buildings = {fid: f for fid, f in state.firms.items() if f.kind == "residential"}
    match_housing(seekers, buildings, gen, ledger)
    for firm in state.firms.values():
        if firm.kind != "residential":
            firm.output_target = max(1.0, capacity(firm, state.households))
    return state
