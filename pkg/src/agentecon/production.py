"""Firm-side physics: templates, production, dividends, valuation, bankruptcy.

Also hosts the offline recipe synthesis used to build the template catalog
from an input-output matrix.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .catalog import DanglingReference, DuplicateGood, GoodsCatalog, SchemaError, _data_path
from .ledger import Ledger
from .money import Money, floor_cents, to_cents
from .state import FirmState, HouseholdState

DEFAULT_ALPHA = 0.33
VALUE_INFLATION_FLOOR = 0.02
RECIPE_THRESHOLD = 0.75


class DomainError(ValueError):
    pass


class DanglingOccupant(LookupError):
    pass


@dataclass(frozen=True)
class FirmTemplate:
    id: int
    name: str
    good: int
    recipe: dict[int, float]
    positions: tuple[tuple[str, int], ...]
    tfp: float
    alpha: float
    founding_cost: Money

    @property
    def headcount(self) -> int:
        return sum(h for _, h in self.positions)


def cobb_douglas(tfp: float, labor: float, capital: float, alpha: float) -> float:
    """Output ``A * L**(1 - alpha) * K**alpha``."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if tfp <= 0 or labor < 0 or capital < 0:
        raise DomainError("tfp must be positive and factor inputs non-negative")
    if labor == 0 or capital == 0:
        return 0.0
    return tfp * labor ** (1.0 - alpha) * capital ** alpha


def effective_labor(firm: FirmState, households: Mapping[int, HouseholdState]) -> float:
    total = 0.0
    for pos in firm.positions:
        if pos.occupant is None:
            continue
        hh = households.get(pos.occupant)
        if hh is None:
            raise DanglingOccupant(f"firm {firm.id} position {pos.id} -> household {pos.occupant}")
        total += hh.labor * hh.skills.get(pos.skill, 0.0)
    return total


def capacity(firm: FirmState, households: Mapping[int, HouseholdState]) -> float:
    return cobb_douglas(firm.tfp, effective_labor(firm, households), firm.capital, firm.alpha)


def input_bound(firm: FirmState) -> float:
    bound = math.inf
    for good, units in firm.recipe.items():
        if units > 0:
            bound = min(bound, firm.stock(good) / units)
    return bound


def produce(firm: FirmState, target: float, capacity: float) -> tuple[float, dict[int, float]]:
    """Produce ``min(target, capacity, input bound)`` units, consuming recipe inputs.

    Returns the units produced and the input quantities consumed.
    """
    if target < 0:
        raise DomainError("negative production target")
    bound = input_bound(firm)
    output = min(target, capacity, bound)
    if output <= 0:
        return 0.0, {}
    consumed = {}
    for good, units in firm.recipe.items():
        if units <= 0:
            continue
        need = output * units
        left = firm.stock(good) - need
        if output == bound and firm.stock(good) / units == bound:
            left = 0.0  # binding input is used up exactly
        consumed[good] = need
        firm.inventory[good] = max(0.0, left)
    firm.inventory[firm.good] = firm.stock(firm.good) + output
    return output, consumed


def distribute_dividends(firm: FirmState, ledger: Ledger, step: int = 0) -> dict[str, Money]:
    """Pay ``share * d * m / sum(shares)`` to each shareholder, floored to the cent.

    Rounding remainders stay with the firm.
    """
    if not 0.0 <= firm.dividend_rate <= 1.0:
        raise DomainError("dividend rate outside [0, 1]")
    total_shares = sum(firm.shareholders.values())
    if total_shares <= 0:
        raise DomainError("firm has no shares outstanding")
    cash = ledger.balance(firm.cash_account)
    payouts: dict[str, Money] = {}
    if cash <= 0 or firm.dividend_rate == 0:
        return {owner: 0 for owner in sorted(firm.shareholders)}
    rate = Decimal(repr(float(firm.dividend_rate)))
    for owner in sorted(firm.shareholders):
        amount = floor_cents(Decimal(firm.shareholders[owner]) * rate * cash / total_shares)
        payouts[owner] = amount
        if amount > 0:
            ledger.transfer(firm.cash_account, owner, amount, "dividend", step, firm=firm.id)
    return payouts


def firm_value(profits: Sequence[Money], inflation: Optional[float], cash: Money,
               loans: Money, capital_value: float, floor: float = VALUE_INFLATION_FLOOR) -> float:
    """Capitalized trailing profits plus net cash plus capital book value, in cents.

    ``loans`` is the outstanding principal (positive). With fewer than 12
    months of history the average over the available months is used.
    """
    window = list(profits)[-12:]
    rate = floor if inflation is None or not math.isfinite(inflation) else max(inflation, floor)
    capitalized = (sum(window) / len(window)) / rate if window else 0.0
    return capitalized + cash - loans + capital_value


def check_bankruptcy(revenues: Sequence[Money], assets: float, overdue_debt: Money) -> bool:
    """Zero revenue for twelve straight months and assets short of overdue debt."""
    window = list(revenues)[-12:]
    if len(window) < 12 or any(r > 0 for r in window):
        return False
    return assets < overdue_debt


def synthesize_recipes(matrix: np.ndarray, threshold: float = RECIPE_THRESHOLD,
                       exclude_self: bool = False) -> list[dict[int, float]]:
    """Per output column, keep the smallest prefix of inputs (largest first) whose
    cumulative share of input value exceeds ``threshold``.

    With ``exclude_self`` the diagonal (an industry's use of its own output)
    is dropped before normalizing, so no recipe lists its own good.

    ``matrix[i, j]`` is the value of input ``i`` per unit of output ``j``;
    returned coefficients are input units per output unit at equal prices.
    All-zero columns give an empty recipe (a raw producer).
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise SchemaError("IO matrix must be square")
    if (matrix < 0).any():
        raise SchemaError("IO matrix must be non-negative")
    recipes = []
    for j in range(matrix.shape[1]):
        col = matrix[:, j].copy()
        if exclude_self:
            col[j] = 0.0
        total = math.fsum(col)
        if total == 0:
            recipes.append({})
            continue
        order = sorted(range(len(col)), key=lambda i: (-col[i], i))
        chosen, running = [], []
        for i in order:
            chosen.append(i)
            running.append(col[i])
            if math.fsum(running) > threshold * total:
                break
        recipes.append({i: float(col[i]) for i in chosen if col[i] > 0})
    return recipes


def load_io_matrix(path: str | Path | None = None) -> tuple[list[str], np.ndarray]:
    path = Path(path) if path else _data_path("io_matrix.csv")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0][1:], rows[1:]
    names = [r[0] for r in body]
    if names != header:
        raise SchemaError("IO matrix row and column labels differ")
    return header, np.array([[float(v) for v in r[1:]] for r in body])


def load_templates(path: str | Path | None, catalog: GoodsCatalog, skills: Sequence[str],
                   require_complete: bool = True) -> list[FirmTemplate]:
    path = Path(path) if path else _data_path("templates.json")
    try:
        raw = json.loads(Path(path).read_text())["templates"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SchemaError(f"cannot parse template catalog {path}: {exc}") from exc
    skill_set = set(skills)
    templates, seen_goods = [], set()
    for entry in raw:
        try:
            good = catalog.by_name(entry["good"]).id
            recipe = {catalog.by_name(name).id: float(units) for name, units in entry["recipe"].items()}
            positions = tuple((p["skill"], int(p["headcount"])) for p in entry["positions"])
            tmpl = FirmTemplate(int(entry["id"]), str(entry["name"]), good, recipe, positions,
                                float(entry.get("tfp", 1.0)), float(entry.get("alpha", DEFAULT_ALPHA)),
                                to_cents(entry["founding_cost"]))
        except KeyError as exc:
            raise SchemaError(f"template missing field {exc}") from exc
        for skill, headcount in tmpl.positions:
            if skill not in skill_set:
                raise DanglingReference(f"template {tmpl.id} uses unknown skill {skill!r}")
            if headcount <= 0:
                raise SchemaError(f"template {tmpl.id} has non-positive headcount")
        if any(u < 0 for u in recipe.values()):
            raise SchemaError(f"template {tmpl.id} has a negative recipe coefficient")
        if not 0 < tmpl.alpha < 1 or tmpl.tfp <= 0:
            raise SchemaError(f"template {tmpl.id} has invalid tfp/alpha")
        if good in seen_goods:
            raise DuplicateGood(f"two templates produce {entry['good']!r}")
        seen_goods.add(good)
        templates.append(tmpl)
    if require_complete:
        missing = [g.name for g in catalog if g.id not in seen_goods]
        if missing:
            raise DanglingReference(f"goods without a template: {missing}")
    return sorted(templates, key=lambda t: t.id)
