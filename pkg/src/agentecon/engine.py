"""The monthly step loop: four stages, shocks, checkpoints and whole runs."""
from __future__ import annotations

import copy
import json
import logging
import pickle
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import markets
from .catalog import load_age_table
from .central_bank import annual_policy_update
from .config import RunConfig, Scenario
from .decisions.actions import ActionSet, GuardContext, guard_actions
from .decisions.backends import Backend, ChatConfig, HeuristicBackend, RemoteBackend, ReplayStore
from .decisions.pool import RemotePlacement, place_building, pool_step
from .decisions.views import (AgentView, firm_view, government_view, household_view, pool_view,
                              posted_prices)
from .government import (InvalidPlan, InvalidSchedule, StepAccounts, base_prices_from, collect_taxes,
                         compute_indicators, IndicatorFrame, make_schedule, spend, validate_plan)
from .ledger import LedgerError
from .money import floor_cents, round_cents, to_cents, to_units
from .production import capacity, check_bankruptcy, distribute_dividends, effective_labor, firm_value, produce
from .rng import RngTree
from .spatial import export_snapshot
from .state import (BANK, GOV, POOL, Contribution, EconomyState, FirmBook, FirmState, MonthBook,
                    state_hash)
from .trace import Trace, export_indicators_csv
from .world import (CONSTRUCTION, REAL_ESTATE, add_household, building_kind, found_firm, init_world,
                    population_centroid)

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "agentecon-checkpoint"
CHECKPOINT_VERSION = 1
STAGES = ("production-trading", "taxation-dividend", "metabolic", "revision")
HISTORY = 24


class StepError(RuntimeError):
    """A stage failed; the state was rolled back to the start of the step."""

    def __init__(self, step: int, stage: str, cause: BaseException):
        super().__init__(f"step {step}, stage {stage}: {type(cause).__name__}: {cause}")
        self.step = step
        self.stage = stage
        self.cause = cause


class AuditFailure(RuntimeError):
    pass


class SchemaVersionMismatch(ValueError):
    pass


class CheckpointIOError(OSError):
    pass


@dataclass
class Flows:
    """Accumulators for one step."""
    consumption: int = 0
    investment: int = 0
    government: int = 0
    final_sales: dict = field(default_factory=dict)  # good -> [units, value]
    posted: dict = field(default_factory=dict)  # good -> Fraction mean posted price at trading time
    firm_prices: dict = field(default_factory=dict)
    demand: dict = field(default_factory=dict)
    supply: dict = field(default_factory=dict)
    sold: dict = field(default_factory=dict)
    unmet: dict = field(default_factory=dict)
    sellers: dict = field(default_factory=dict)
    trades: list = field(default_factory=list)
    events: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    added: list = field(default_factory=list)
    removed: list = field(default_factory=list)
    audits: list = field(default_factory=list)

    def sale(self, good: int, units: float, value: int) -> None:
        cur = self.final_sales.setdefault(good, [0.0, 0])
        cur[0] += units
        cur[1] += value


def _add(d: dict, key, amount) -> None:
    d[key] = d.get(key, 0) + amount


def make_backend(config: RunConfig, session=None) -> tuple[Backend, Optional[RemotePlacement]]:
    if config.backend == "heuristic":
        backend: Backend = HeuristicBackend(config.heuristic)
        store = None
    else:
        chat = config.chat
        if config.backend == "replay":
            store = ReplayStore(chat.replay_path, "replay")
        else:
            store = ReplayStore(chat.record_path, "record") if chat.record_path else None
        backend = RemoteBackend(chat, session=session, store=store)
    placement = None
    if config.placement == "remote":
        placement = RemotePlacement(config.chat, session=session, store=store)
    return backend, placement


class Engine:
    def __init__(self, config: RunConfig, backend: Optional[Backend] = None,
                 placement: Optional[RemotePlacement] = None, workers: int = 1):
        self.config = config.validate()
        if backend is None:
            backend, placement = make_backend(config)
        self.backend = backend
        self.placement = placement
        self.workers = workers
        self.ages = load_age_table()

    # ------------------------------------------------------------------ helpers

    def phase(self, step: int) -> int:
        return 1 if step < self.config.phase1_steps else 2

    def _audit(self, state: EconomyState, fl: Flows, stage: str) -> None:
        rep = state.ledger.audit(full=False)
        fl.audits.append(rep.passed)
        if not rep.passed:
            raise AuditFailure(f"ledger audit failed after {stage}: {rep}")
        if not state.city.consistent():
            raise AuditFailure(f"map inconsistent after {stage}")

    def _capital_price(self, state: EconomyState) -> int:
        prices = posted_prices(state)
        return min(prices[g] for g in state.catalog.durable)

    def _last_inflation(self, state: EconomyState) -> Optional[float]:
        return state.indicators[-1].get("inflation") if state.indicators else None

    def _value(self, state: EconomyState, firm: FirmState) -> float:
        led = state.ledger
        return firm_value(firm.profits, self._last_inflation(state), led.balance(firm.cash_account),
                          markets.outstanding(led, firm.loan_account),
                          firm.capital * self._capital_price(state))

    def _firm_limit(self, state: EconomyState, firm: FirmState) -> float:
        return markets.firm_credit_limit(self._value(state, firm), self.config.firm_credit_fraction)

    def _hh_limit(self, hh) -> float:
        return markets.household_credit_limit(hh, self.config.household_credit_multiple)

    # ------------------------------------------------------------------ stage 1

    def _production_trading(self, state: EconomyState, fl: Flows) -> None:
        cfg, t, led, cat = self.config, state.step, state.ledger, state.catalog
        hhs, firms = state.households, state.firms
        for hid in sorted(hhs):
            hh = hhs[hid]
            hh.month = MonthBook(interest=hh.carried_interest)
            hh.carried_interest = 0
        for fid in sorted(firms):
            f = firms[fid]
            f.last_book, f.book = f.book, FirmBook()
            markets.apply_pending_wages(f, hhs)

        for fid in sorted(firms):
            f = firms[fid]
            if f.kind == "residential":
                continue
            cap = capacity(f, hhs)
            out, _ = produce(f, max(0.0, f.output_target), cap)
            f.book.produced, f.book.capacity = out, cap
            f.production_history = (f.production_history + [out])[-HISTORY:]

        prices = posted_prices(state)
        price_lists: dict[int, list[int]] = {}
        offers = []
        for fid in sorted(firms):
            f = firms[fid]
            fl.firm_prices[fid] = f.price
            if f.kind == "residential":
                continue
            price_lists.setdefault(f.good, []).append(f.price)
            stock = f.stock(f.good)
            f.book.available = stock
            _add(fl.sellers, f.good, 1)
            if stock > 1e-9:
                offers.append(markets.GoodsOffer(fid, f.good, f.price, stock, f.location))
                _add(fl.supply, f.good, stock)
        for g in range(len(cat)):
            ps = price_lists.get(g)
            fl.posted[g] = Fraction(sum(ps), len(ps)) if ps else Fraction(state.ref_prices[g])

        essential = set(cat.essential)
        demands = []
        for hid in sorted(hhs):
            hh = hhs[hid]
            plan = {g: u for g, u in sorted(hh.plan.items()) if u > 0}
            if not plan or hh.plan_budget <= 0:
                continue
            weights = {g: u * prices[g] for g, u in plan.items()}
            total = sum(weights.values())
            loc = firms[hh.residence].location if hh.residence in firms else None
            for g, u in plan.items():
                budget = int(hh.plan_budget * weights[g] / total)
                demands.append(markets.GoodsDemand(hh.cash_account, g, u, budget, g in essential,
                                                   "consumption", loc))
                _add(fl.demand, g, u)
        durable = cat.durable
        live_durable = sorted((o.price, o.good) for o in offers if o.good in durable)
        for fid in sorted(firms):
            f = firms[fid]
            if f.kind == "residential":
                continue
            payroll = sum(p.salary for p in f.positions if p.occupant is not None)
            free = max(0, led.balance(f.cash_account) - payroll)
            needs = {g: max(0.0, u * f.output_target - f.stock(g)) for g, u in sorted(f.recipe.items())
                     if g != f.good}
            needs = {g: u for g, u in needs.items() if u > 1e-9}
            cost = sum(u * prices[g] for g, u in needs.items())
            spend_inputs = min(free, int(cost))
            for g, u in needs.items():
                if cost <= 0:
                    break
                budget = int(spend_inputs * (u * prices[g]) / cost)
                demands.append(markets.GoodsDemand(f.cash_account, g, u, budget, False, "input", f.location))
                _add(fl.demand, g, u)
            if f.capital_order > 1e-9 and live_durable:
                g = live_durable[0][1]
                budget = max(0, free - spend_inputs)
                demands.append(markets.GoodsDemand(f.cash_account, g, f.capital_order, budget, False,
                                                   "capital", f.location))
                _add(fl.demand, g, f.capital_order)

        result = markets.clear_goods_market(offers, demands, state.rng["goods"], led, t, cfg.transport_cost)
        for tr in result.trades:
            seller = firms[tr.seller]
            seller.book.revenue += tr.value
            seller.book.sold += tr.units
            _add(fl.sold, tr.good, tr.units)
            if tr.buyer.startswith("hh:"):
                hh = hhs[int(tr.buyer[3:])]
                hh.month.spend += tr.value
                if cat[tr.good].food:
                    hh.month.food_spend += tr.value
                if tr.essential:
                    hh.month.essential_spend += tr.value
                fl.consumption += tr.value
                fl.sale(tr.good, tr.units, tr.value)
            else:
                buyer = firms[int(tr.buyer.split(":")[1])]
                if tr.purpose == "input":
                    buyer.inventory[tr.good] = buyer.stock(tr.good) + tr.units
                    buyer.book.input_cost += tr.value
                else:
                    buyer.capital += tr.units
                    buyer.capital_order = max(0.0, buyer.capital_order - tr.units)
                    buyer.book.capital_cost += tr.value
                    fl.investment += tr.value
                    fl.sale(tr.good, tr.units, tr.value)
            if cfg.trace_trades:
                fl.trades.append([tr.buyer, tr.seller, tr.good, round(tr.units, 6), tr.price, tr.value,
                                  tr.purpose])
        for off in offers:
            firms[off.seller].inventory[off.good] = off.stock
        for _, g, units, _ in result.unmet:
            _add(fl.unmet, g, units)

        self._pay_salaries(state, fl)

        buildings = {fid: f for fid, f in firms.items() if f.kind == "residential"}
        seekers = [hhs[h] for h in sorted(hhs) if hhs[h].residence is None or hhs[h].wants_move]

        def workplace(h):
            if h.employment is not None and h.employment.firm_id in firms:
                return firms[h.employment.firm_id].location
            return None

        moved = markets.match_housing(seekers, buildings, state.rng["housing"], led, workplace)
        for hid, bid in moved.assignments:
            fl.events.append({"kind": "move-in", "household": hid, "building": bid})
        payments, evicted = markets.collect_rent(hhs, buildings, led, t, cfg.eviction_after)
        housing_good = cat.by_name(REAL_ESTATE).id
        for hid, bid, amount in payments:
            b = buildings[bid]
            b.book.revenue += amount
            b.book.sold += 1
            if amount > 0:
                fl.consumption += amount
                fl.sale(housing_good, 1.0, amount)
        for b in buildings.values():
            b.book.available = float(b.units)
        for hid in evicted:
            fl.events.append({"kind": "eviction", "household": hid})

        n = len(hhs)
        salaries = [p.salary for f in firms.values() for p in f.positions]
        state.market = {
            "demand": dict(sorted(fl.demand.items())), "supply": dict(sorted(fl.supply.items())),
            "sold": dict(sorted(fl.sold.items())), "unmet": dict(sorted(fl.unmet.items())),
            "sellers": dict(sorted(fl.sellers.items())),
            "unemployment": (sum(1 for h in hhs.values() if h.employment is None) / n) if n else 0.0,
            "mean_salary": (sum(salaries) / len(salaries)) if salaries else to_cents(cfg.default_wage),
            "roi": state.market.get("roi", 0.0), "inflation": self._last_inflation(state),
        }

    def _pay_salaries(self, state: EconomyState, fl: Flows) -> None:
        led, t = state.ledger, state.step
        for fid in sorted(state.firms):
            f = state.firms[fid]
            for pos in sorted(f.positions, key=lambda p: p.id):
                if pos.occupant is None:
                    continue
                hh = state.households[pos.occupant]
                amount = pos.salary
                short = amount - led.balance(f.cash_account)
                if short > 0:
                    room = self._firm_limit(state, f) - markets.outstanding(led, f.loan_account)
                    if room >= short:
                        markets.borrow(led, f.cash_account, f.loan_account, short, self._firm_limit(state, f), t)
                        if f.loan_since is None:
                            f.loan_since = t
                if led.balance(f.cash_account) >= amount:
                    led.transfer(f.cash_account, hh.cash_account, amount, "salary", t, firm=fid)
                    hh.month.salary += amount
                    f.book.wage_bill += amount
                else:
                    markets.layoff(f, hh)
                    fl.events.append({"kind": "unpaid-layoff", "firm": fid, "household": hh.id})

    # ------------------------------------------------------------------ stage 2

    def _taxation_dividend(self, state: EconomyState, fl: Flows) -> None:
        led, t = state.ledger, state.step
        hhs, firms = state.households, state.firms
        costs = {tp.id: tp.founding_cost for tp in state.templates}
        paid = base = 0
        for fid in sorted(firms):
            f = firms[fid]
            if sum(f.shareholders.values()) <= 0:
                continue
            payouts = distribute_dividends(f, led, t)
            total = sum(payouts.values())
            f.book.dividends = total
            for owner, amount in payouts.items():
                if amount and owner.startswith("hh:"):
                    hhs[int(owner[3:])].month.dividend += amount
            if f.kind == "productive":
                paid += total
                base += costs.get(f.template_id, 0)
        state.market["roi"] = 12.0 * paid / base if base else 0.0
        report = collect_taxes(hhs, firms, state.government, led, t)
        ubi = spend(state.government, report.revenue, hhs, led, t)
        fl.events.append({"kind": "fiscal", "revenue": report.revenue, "ubi_each": ubi.ubi_each,
                          "public_fund": state.government.public_fund})
        for fid in sorted(firms):
            f = firms[fid]
            b = f.book
            f.profits = (f.profits + [b.revenue - b.wage_bill - b.input_cost - b.tax])[-HISTORY:]
            f.revenues = (f.revenues + [b.revenue])[-HISTORY:]
        for hid in sorted(hhs):
            hh = hhs[hid]
            hh.income_history = (hh.income_history + [hh.month.gross_income])[-HISTORY:]

    # ------------------------------------------------------------------ stage 3

    def _decide(self, view: AgentView, state: EconomyState) -> tuple[ActionSet, list]:
        gen = state.rng.agent(state.step, view.role, view.agent_id)
        dec = self.backend.decide(view, gen)
        return dec.actions, dec.warnings

    def _place(self, state: EconomyState, kind: str, fl: Flows) -> tuple[int, int]:
        return place_building(state.city, kind, self.placement, None, population_centroid(state), fl.warnings)

    def _metabolic(self, state: EconomyState, fl: Flows) -> None:
        cfg, led, t = self.config, state.ledger, state.step

        def choose(eligible: int) -> Optional[int]:
            view = pool_view(state, led.balance(POOL), eligible)
            actions, warns = self._decide(view, state)
            fl.warnings.extend(warns)
            act = actions.get("found_firm")
            return int(act.arguments["template"]) if act is not None else None

        def found(tmpl, owners):
            kind = building_kind(state, tmpl)
            cell = self._place(state, kind, fl)
            firm = found_firm(state, cfg, tmpl, owners, kind, cell, source=POOL, tag="found")
            fl.events.append({"kind": "founding", "firm": firm.id, "template": tmpl.id, "good": firm.good,
                              "owners": dict(sorted(owners.items())), "cost": tmpl.founding_cost})
            fl.added.append([firm.id, kind, firm.cash_account, cell[0], cell[1]])
            return firm

        out = pool_step(state.pool, led, state.templates, t, choose, found)
        for owner, amount in sorted(out.refunds.items()):
            fl.events.append({"kind": "refund", "owner": owner, "amount": amount})

        gov = state.government
        if gov.public_fund > 0:
            self._found_public(state, fl)

        for fid in sorted(state.firms):
            f = state.firms[fid]
            if f.kind == "residential":
                continue
            loans = markets.outstanding(led, f.loan_account)
            overdue = loans if f.loan_since is not None and t - f.loan_since >= 12 else 0
            assets = led.balance(f.cash_account) + f.capital * self._capital_price(state)
            if check_bankruptcy(f.revenues, assets, overdue):
                self._remove_firm(state, f, fl)

        if t < cfg.phase1_steps:
            for _ in range(cfg.arrivals_at(t, len(state.households))):
                hh = add_household(state, cfg, state.rng["metabolic"], state.skills, self.ages)
                fl.events.append({"kind": "arrival", "household": hh.id})

    def _found_public(self, state: EconomyState, fl: Flows) -> None:
        gov, led = state.government, state.ledger
        budget = min(gov.public_fund, led.balance(GOV))
        housing = state.catalog.by_name(REAL_ESTATE).id
        options = [tp for tp in state.templates if tp.founding_cost <= budget and tp.good != housing]
        if not options:
            return
        unmet = state.market.get("unmet", {})
        tmpl = max(options, key=lambda tp: (unmet.get(tp.good, 0.0), -tp.founding_cost, -tp.id))
        cell = self._place(state, "public", fl)
        firm = found_firm(state, self.config, tmpl, {GOV: tmpl.founding_cost}, "public", cell,
                          source=GOV, tag="public-spend")
        gov.public_fund -= tmpl.founding_cost
        fl.government += tmpl.founding_cost
        fl.events.append({"kind": "public-founding", "firm": firm.id, "template": tmpl.id,
                          "cost": tmpl.founding_cost})
        fl.added.append([firm.id, "public", firm.cash_account, cell[0], cell[1]])

    def _remove_firm(self, state: EconomyState, f: FirmState, fl: Flows) -> None:
        led, t = state.ledger, state.step
        for pos in f.positions:
            if pos.occupant is not None:
                markets.layoff(f, state.households[pos.occupant])
        for hh in state.households.values():
            if hh.offer is not None and hh.offer.firm_id == f.id:
                hh.offer = None
            hh.shares.pop(f.id, None)
        debt = markets.outstanding(led, f.loan_account)
        pay = min(debt, led.balance(f.cash_account))
        if pay > 0:
            markets.repay(led, f.cash_account, f.loan_account, pay, t)
        if debt - pay > 0:
            led.transfer(BANK, f.loan_account, debt - pay, "write-off", t, firm=f.id)
        cash = led.balance(f.cash_account)
        total = sum(f.shareholders.values())
        if cash > 0 and total > 0:
            owners = sorted(f.shareholders)
            parts = {o: cash * f.shareholders[o] // total for o in owners}
            top = min(owners, key=lambda o: (-f.shareholders[o], o))
            parts[top] += cash - sum(parts.values())
            for o in owners:
                if parts[o] > 0:
                    led.transfer(f.cash_account, o, parts[o], "dividend", t, firm=f.id, liquidation=True)
        state.city.release(f.id)
        del state.firms[f.id]
        state.removed_firms.append(f.id)
        fl.removed.append(f.id)
        fl.events.append({"kind": "bankruptcy", "firm": f.id, "good": f.good, "written_off": debt - pay})

    # ------------------------------------------------------------------ stage 4

    def _revision(self, state: EconomyState, fl: Flows) -> None:
        cfg, led, t = self.config, state.ledger, state.step
        hhs, firms = state.households, state.firms
        accrued = markets.accrue_interest(led, state.bank.rates, t)
        for acct, amount in accrued.items():
            if acct.startswith("dep:hh:") and amount:
                hhs[int(acct[7:])].carried_interest += amount

        for hh in hhs.values():
            hh.offer = None
        unemployed = [hhs[h] for h in sorted(hhs) if hhs[h].employment is None]
        for hid, vac in markets.match_labor(unemployed, markets.open_vacancies(firms), state.rng["labor"]):
            markets.make_offer(hhs[hid], vac)
            fl.events.append({"kind": "offer", "household": hid, "firm": vac.firm_id, "position": vac.position_id})

        before = state.bank.rates.policy
        development = t >= cfg.phase1_steps
        annual_policy_update(state.bank, cfg.policy, t, development, self._annual_inflation(state),
                             self._quarterly_real_gdp(state))
        if state.bank.rates.policy != before:
            fl.events.append({"kind": "policy-rate", "rate": state.bank.rates.policy})

        views, contexts = [], []
        for hid in sorted(hhs):
            hh = hhs[hid]
            views.append(household_view(state, hh))
            room = max(0.0, self._hh_limit(hh) - markets.outstanding(led, hh.loan_account))
            spendable = led.balance(hh.cash_account) + led.balance(hh.deposit_account) + room
            contexts.append(GuardContext(spendable=to_units(int(spendable))))
        for fid in sorted(firms):
            f = firms[fid]
            cap = capacity(f, hhs) if f.kind != "residential" else 0.0
            labor = effective_labor(f, hhs)
            views.append(firm_view(state, f, cap, labor, self._firm_limit(state, f)))
            sal = tuple((p.id, to_units(p.salary)) for p in f.positions)
            ref = (sum(s for _, s in sal) / len(sal)) if sal else cfg.default_wage
            out_ref = max(max(f.production_history[-12:], default=0.0), cap, 1.0)
            contexts.append(GuardContext(price=to_units(f.price), salaries=sal, reference_salary=ref,
                                         output_reference=out_ref))
        views.append(government_view(state))
        contexts.append(GuardContext())

        if self.workers > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                decided = list(pool.map(lambda v: self._decide(v, state), views))
        else:
            decided = [self._decide(v, state) for v in views]

        for view, ctx, (actions, warns) in zip(views, contexts, decided):
            fl.warnings.extend(warns)
            guarded, clamps = guard_actions(actions, ctx, cfg.guardrails)
            fl.warnings.extend(w.to_dict() for w in clamps)
            for act in guarded.actions:
                try:
                    self._apply(state, view.role, view.agent_id, act.name, act.arguments, fl)
                except (ValueError, KeyError, LedgerError, markets.StaleOffer, markets.NotEmployed,
                        markets.NotEmployer, markets.CreditLimitExceeded, markets.OverRepay) as exc:
                    fl.warnings.append({"kind": "action-error", "role": view.role, "agent": view.agent_id,
                                        "function": act.name, "error": type(exc).__name__,
                                        "message": str(exc)})

    def _annual_inflation(self, state: EconomyState) -> Optional[float]:
        defl = [d.get("deflator") for d in state.indicators]
        if len(defl) >= 13 and defl[-1] and defl[-13]:
            return defl[-1] / defl[-13] - 1.0
        return None

    def _quarterly_real_gdp(self, state: EconomyState) -> list[float]:
        real = [d["real_gdp"] for d in state.indicators if d.get("real_gdp") is not None]
        n = len(real) // 3
        return [sum(real[3 * q:3 * q + 3]) for q in range(n)]

    def _apply(self, state: EconomyState, role: str, aid: int, name: str, args: dict, fl: Flows) -> None:
        led, t, cat = state.ledger, state.step, state.catalog
        if role == "household":
            hh = state.households[aid]
            if name == "set_consumption":
                plan = {}
                for good, units in args["goods"].items():
                    plan[cat.by_name(good).id] = float(units)
                hh.plan = plan
                hh.plan_budget = to_cents(args["budget"])
            elif name == "labor_action":
                act = args["action"]
                if act == "accept":
                    emp = markets.accept_offer(hh, state.firms)
                    fl.events.append({"kind": "hire", "household": aid, "firm": emp.firm_id,
                                      "position": emp.position_id, "salary": emp.salary})
                elif act == "reject":
                    markets.reject_offer(hh)
                elif act == "resign":
                    fid = hh.employment.firm_id if hh.employment else None
                    markets.resign(hh, state.firms)
                    fl.events.append({"kind": "resign", "household": aid, "firm": fid})
            elif name == "housing_action":
                hh.wants_move = args["action"] == "move"
                hh.max_rent = to_cents(args["max_rent"]) if "max_rent" in args else None
            elif name == "financial_action":
                self._household_finance(state, hh, args)
        elif role == "firm":
            f = state.firms[aid]
            if name == "set_output_and_price":
                f.price = max(1, to_cents(args["price"]))
                if "output" in args and f.kind != "residential":
                    f.output_target = float(args["output"])
            elif name == "labor_actions":
                for item in args.get("layoff", []):
                    markets.layoff(f, state.households[item])
                    fl.events.append({"kind": "layoff", "firm": aid, "household": item})
                for item in args.get("set_wage", []):
                    markets.set_wage(f, item["position"], to_cents(item["salary"]))
                for item in args.get("post", []):
                    if item["skill"] not in state.skills:
                        raise KeyError(f"unknown skill {item['skill']!r}")
                    pos = f.add_position(item["skill"], to_cents(item["salary"]), t)
                    fl.events.append({"kind": "vacancy", "firm": aid, "position": pos.id, "salary": pos.salary})
            elif name == "investment_action":
                if args.get("repay"):
                    amount = min(to_cents(args["repay"]), markets.outstanding(led, f.loan_account))
                    markets.repay(led, f.cash_account, f.loan_account, amount, t)
                    if markets.outstanding(led, f.loan_account) == 0:
                        f.loan_since = None
                if args.get("borrow"):
                    markets.borrow(led, f.cash_account, f.loan_account, to_cents(args["borrow"]),
                                   self._firm_limit(state, f), t)
                    if f.loan_since is None:
                        f.loan_since = t
                if args.get("capital_units"):
                    f.capital_order += float(args["capital_units"])
        elif role == "government":
            gov = state.government
            if name == "set_tax_schedules":
                if "household" in args:
                    gov.household_schedule = make_schedule(args["household"])
                if "firm" in args:
                    gov.firm_schedule = make_schedule(args["firm"])
            elif name == "set_spending_plan":
                validate_plan(args["ubi"], args["public"], args["reserve"])
                gov.ubi_share, gov.public_share, gov.reserve_share = args["ubi"], args["public"], args["reserve"]

    def _household_finance(self, state: EconomyState, hh, args: dict) -> None:
        led, t = state.ledger, state.step
        if args.get("withdraw"):
            amount = min(to_cents(args["withdraw"]), led.balance(hh.deposit_account))
            led.transfer(hh.deposit_account, hh.cash_account, amount, "withdraw", t)
        if args.get("borrow"):
            markets.borrow(led, hh.cash_account, hh.loan_account, to_cents(args["borrow"]), self._hh_limit(hh), t)
            if hh.loan_since is None:
                hh.loan_since = t
        if args.get("repay"):
            amount = min(to_cents(args["repay"]), markets.outstanding(led, hh.loan_account),
                         led.balance(hh.cash_account))
            markets.repay(led, hh.cash_account, hh.loan_account, amount, t)
            if markets.outstanding(led, hh.loan_account) == 0:
                hh.loan_since = None
        if args.get("deposit"):
            amount = min(to_cents(args["deposit"]), led.balance(hh.cash_account))
            led.transfer(hh.cash_account, hh.deposit_account, amount, "deposit", t)
        if args.get("invest"):
            amount = min(to_cents(args["invest"]), led.balance(hh.cash_account))
            if amount <= 0:
                return
            led.transfer(hh.cash_account, POOL, amount, "invest", t)
            state.pool.contributions.append(Contribution(hh.key, amount, t))
            hh.month.invest += amount

    # ------------------------------------------------------------------ indicators

    def _indicators(self, state: EconomyState, fl: Flows) -> IndicatorFrame:
        led, t = state.ledger, state.step
        hhs = state.households
        n_goods = len(state.catalog)
        acc = StepAccounts(
            step=t, phase=self.phase(t), consumption=fl.consumption, investment=fl.investment,
            government=fl.government,
            final_sales={g: (u, v) for g, (u, v) in sorted(fl.final_sales.items())},
            posted_prices=fl.posted, gov_price_good=state.catalog.by_name(CONSTRUCTION).id,
            salaries=sum(h.month.salary for h in hhs.values()),
            wealth=[led.balance(h.cash_account) + led.balance(h.deposit_account)
                    - markets.outstanding(led, h.loan_account) for _, h in sorted(hhs.items())],
            income=[h.month.gross_income for _, h in sorted(hhs.items())],
            unemployed=sum(1 for h in hhs.values() if h.employment is None), labor_force=len(hhs),
            vacancies=sum(len(f.vacancies()) for f in state.firms.values()),
            positions=sum(len(f.positions) for f in state.firms.values()),
            m0=sum(b for a, b in led.balances.items() if not a.startswith(("dep:", "loan:"))),
            deposits=sum(b for a, b in led.balances.items() if a.startswith("dep:")),
            production={g: 0.0 for g in range(n_goods)},
            population=len(hhs), firms=sum(1 for f in state.firms.values() if f.kind != "residential"),
            supply=led.supply, minted=led.minted, policy_rate=state.bank.rates.policy,
        )
        for f in state.firms.values():
            if f.kind != "residential":
                acc.production[f.good] += f.book.produced
        acc.production = {g: round(u, 6) for g, u in acc.production.items() if u > 0}
        if state.base_prices is None and self.phase(t) == 2:
            state.base_prices = base_prices_from(acc, n_goods)
            state.base_step = t
        prev = None
        if state.indicators:
            d = dict(state.indicators[-1])
            d["production"] = {}
            prev = IndicatorFrame(**d)
        return compute_indicators(acc, state.base_prices, prev)

    def _record(self, state: EconomyState, fl: Flows, frame: IndicatorFrame) -> dict:
        led = state.ledger
        n_goods = len(state.catalog)
        sales = fl.final_sales
        rec = {
            "kind": "step", "step": state.step, "phase": self.phase(state.step),
            "indicators": frame.to_dict(),
            "goods": {
                "price": [round(float(fl.posted[g]), 4) for g in range(n_goods)],
                "sold": [round(fl.sold.get(g, 0.0), 6) for g in range(n_goods)],
                "final_units": [round(sales.get(g, [0.0, 0])[0], 6) for g in range(n_goods)],
                "final_value": [sales.get(g, [0.0, 0])[1] for g in range(n_goods)],
                "demand": [round(fl.demand.get(g, 0.0), 6) for g in range(n_goods)],
                "supply": [round(fl.supply.get(g, 0.0), 6) for g in range(n_goods)],
            },
            "events": fl.events, "warnings": fl.warnings,
            "map": {"added": fl.added, "removed": fl.removed}, "audit": fl.audits,
        }
        if self.config.trace_trades:
            rec["trades"] = fl.trades
        if self.config.trace_agents:
            rec["households"] = [
                {"id": h.id, "income": h.month.gross_income, "ubi": h.month.ubi, "spend": h.month.spend,
                 "food": h.month.food_spend, "rent": h.month.rent, "tax": h.month.tax,
                 "cash": led.balance(h.cash_account), "deposits": led.balance(h.deposit_account),
                 "employed": h.employment is not None}
                for _, h in sorted(state.households.items())]
            rec["firms"] = [
                {"id": f.id, "kind": f.kind, "good": f.good, "price": fl.firm_prices.get(f.id, f.price),
                 "produced": round(f.book.produced, 6), "sold": round(f.book.sold, 6),
                 "revenue": f.book.revenue, "cash": led.balance(f.cash_account),
                 "employees": sum(1 for p in f.positions if p.occupant is not None),
                 "capital": round(f.capital, 6)}
                for _, f in sorted(state.firms.items())]
        return rec

    # ------------------------------------------------------------------ step

    def step(self, state: EconomyState) -> dict:
        """Advance one month; on any failure restore the pre-step state and raise StepError."""
        mark = state.ledger.mark()
        memo = {id(state.ledger): state.ledger, id(state.catalog): state.catalog,
                id(state.templates): state.templates, id(state.skills): state.skills}
        backup = copy.deepcopy(state, memo)
        fl = Flows()
        stage = "shock"
        try:
            for sc in self.config.scenarios:
                if sc.kind != "none" and sc.trigger == state.step:
                    fl.events.append(apply_shock(sc, state))
            for stage, run_stage in zip(STAGES, (self._production_trading, self._taxation_dividend,
                                                 self._metabolic, self._revision)):
                run_stage(state, fl)
                self._audit(state, fl, stage)
            stage = "indicators"
            frame = self._indicators(state, fl)
            rec = self._record(state, fl, frame)
            state.indicators.append(frame.to_dict())
        except Exception as exc:
            state.ledger.rollback(mark)
            state.__dict__.update(backup.__dict__)
            state.ledger = backup.ledger
            raise StepError(state.step, stage, exc) from exc
        state.step += 1
        return rec


# ---------------------------------------------------------------------- shocks


def shock_goods(scenario: Scenario, seed: int, n_goods: int) -> list[int]:
    """The seeded subset of goods a scenario hits; depends only on (seed, trigger, count)."""
    gen = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([seed, zlib.crc32(b"shock"), scenario.trigger])))
    k = min(scenario.goods, n_goods)
    return sorted(int(g) for g in gen.choice(n_goods, size=k, replace=False))


def apply_shock(scenario: Scenario, state: EconomyState) -> dict:
    """Multiply posted prices of the seeded goods by ``1 + magnitude`` (floor one cent).

    Guardrails do not apply: the shock is exogenous. Returns the event record.
    """
    if scenario.kind == "none":
        return {"kind": "shock", "scenario": "none", "goods": [], "factor": 1.0}
    goods = shock_goods(scenario, state.rng.seed, len(state.ref_prices))
    factor = scenario.factor
    hit = set(goods)
    dec = Decimal(repr(float(factor)))
    for fid in sorted(state.firms):
        f = state.firms[fid]
        if f.kind != "residential" and f.good in hit:
            f.price = max(1, round_cents(f.price * dec))
    for g in goods:
        state.ref_prices[g] = max(1, round_cents(state.ref_prices[g] * dec))
    return {"kind": "shock", "scenario": scenario.kind, "trigger": scenario.trigger,
            "goods": goods, "factor": factor}


# ---------------------------------------------------------------------- checkpoints


def checkpoint_save(state: EconomyState, path: str | Path, config: Optional[RunConfig] = None) -> Path:
    path = Path(path)
    header = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "step": state.step,
              "state_hash": state_hash(state)}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("wb") as fh:
            fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
            pickle.dump({"state": state, "config": config}, fh, protocol=pickle.HIGHEST_PROTOCOL)
    except OSError as exc:
        raise CheckpointIOError(f"cannot write checkpoint {path}: {exc}") from exc
    return path


def checkpoint_load(path: str | Path, with_config: bool = False):
    try:
        with Path(path).open("rb") as fh:
            header = json.loads(fh.readline().decode())
            if header.get("format") != CHECKPOINT_FORMAT:
                raise SchemaVersionMismatch(f"{path} is not a checkpoint")
            if header.get("version") != CHECKPOINT_VERSION:
                raise SchemaVersionMismatch(
                    f"checkpoint version {header.get('version')}, expected {CHECKPOINT_VERSION}")
            payload = pickle.load(fh)
    except OSError as exc:
        raise CheckpointIOError(f"cannot read checkpoint {path}: {exc}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError, pickle.UnpicklingError) as exc:
        raise SchemaVersionMismatch(f"{path} is not a readable checkpoint: {exc}") from exc
    state = payload["state"]
    if state_hash(state) != header["state_hash"]:
        raise SchemaVersionMismatch("checkpoint content does not match its header hash")
    return (state, payload["config"]) if with_config else state


# ---------------------------------------------------------------------- runs


@dataclass
class RunResult:
    trace: Trace
    state: EconomyState
    complete: bool
    error: Optional[StepError] = None


def _outputs(config: RunConfig, out_dir: Optional[str | Path]) -> Optional[Path]:
    out = out_dir or config.out_dir
    if out is None:
        return None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _loop(engine: Engine, state: EconomyState, trace: Trace, until: int, out: Optional[Path],
          on_step: Optional[Callable[[dict], None]]) -> Optional[StepError]:
    cfg = engine.config
    while state.step < until:
        try:
            rec = engine.step(state)
        except StepError as exc:
            log.error("run stopped: %s", exc)
            trace.abort(state.step, exc)
            return exc
        trace.append(rec)
        if out is not None and cfg.snapshot_every and rec["step"] % cfg.snapshot_every == 0:
            export_snapshot(state.city, rec["step"], out / f"map_{rec['step']:04d}.svg")
        if on_step is not None:
            on_step(rec)
    return None


def _finish(engine: Engine, state: EconomyState, trace: Trace, out: Optional[Path], err) -> None:
    if out is None:
        return
    export_indicators_csv(trace, out / "indicators.csv")
    export_snapshot(state.city, state.step, out / "map_final.svg")
    with (out / "warnings.jsonl").open("w") as fh:
        for rec in trace.records:
            for w in rec["warnings"]:
                fh.write(json.dumps({"step": rec["step"], **w}, sort_keys=True) + "\n")
    checkpoint_save(state, out / "checkpoint.pkl", engine.config)


def run(config: RunConfig, out_dir: Optional[str | Path] = None, until: Optional[int] = None,
        engine: Optional[Engine] = None, on_step: Optional[Callable[[dict], None]] = None) -> RunResult:
    """Initialize the world and step through both phases (or up to ``until``).

    With an output directory the trace is streamed to ``trace.jsonl`` and the
    indicator CSV, final map, warnings and a checkpoint are written at the end.
    """
    engine = engine or Engine(config)
    state = init_world(config)
    out = _outputs(config, out_dir)
    trace = Trace.start(config.to_dict(), out / "trace.jsonl" if out else None,
                        initial_map=state.city.to_dict())
    stop = config.total_steps if until is None else min(until, config.total_steps)
    err = _loop(engine, state, trace, stop, out, on_step)
    _finish(engine, state, trace, out, err)
    return RunResult(trace, state, err is None, err)


def resume(checkpoint: str | Path, out_dir: Optional[str | Path] = None, until: Optional[int] = None,
           engine: Optional[Engine] = None, config: Optional[RunConfig] = None,
           on_step: Optional[Callable[[dict], None]] = None) -> RunResult:
    """Continue a checkpointed run; steps are appended to the existing trace file.

    Output goes to ``out_dir``, defaulting to the checkpoint's directory.
    """
    state, saved = checkpoint_load(checkpoint, with_config=True)
    config = config or saved
    engine = engine or Engine(config)
    out = _outputs(config, out_dir or Path(checkpoint).parent)
    if out is not None and (out / "trace.jsonl").exists():
        trace = Trace.continue_file(out / "trace.jsonl")
        if trace.records and trace.records[-1]["step"] != state.step - 1:
            raise CheckpointIOError(f"trace ends at step {trace.records[-1]['step']}, "
                                    f"checkpoint is at step {state.step}")
    else:
        trace = Trace.start(config.to_dict(), out / "trace.jsonl" if out else None,
                            initial_map=state.city.to_dict() if state.step == 0 else None)
    stop = config.total_steps if until is None else min(until, config.total_steps)
    err = _loop(engine, state, trace, stop, out, on_step)
    _finish(engine, state, trace, out, err)
    return RunResult(trace, state, err is None, err)
