import numpy as np
import pytest
from hypothesis import given, strategies as st

from agentecon.decisions.pool import allocate_shares, heuristic_cell, place_building, pool_step
from agentecon.ledger import Ledger
from agentecon.production import FirmTemplate
from agentecon.spatial import Building, CityMap
from agentecon.state import POOL, Contribution, PoolState

TEMPLATE = FirmTemplate(0, "t", 0, {}, (("x", 1),), 1.0, 0.3, 30000)


def pool_ledger(**contribs):
    led = Ledger()
    led.open(POOL)
    for owner in contribs:
        led.open(owner)
    return led


def fund(led, pool, owner, amount, step):
    led.mint_interest(owner, amount)
    led.transfer(owner, POOL, amount, "invest", step)
    pool.contributions.append(Contribution(owner, amount, step))


def founder(led):
    made = {}

    def found(tmpl, shares):
        led.open("firm:1")
        led.transfer(POOL, "firm:1", tmpl.founding_cost, "found")
        made["shares"] = shares
        return "firm:1"
    return found, made


def test_below_every_cost_refunds():
    led, pool = pool_ledger(a=0), PoolState()
    fund(led, pool, "a", 100, 0)
    out = pool_step(pool, led, [TEMPLATE], 1, lambda e: 0, lambda t, s: pytest.fail("founded"))
    assert out.founded is None and out.refunds == {"a": 100}
    assert led.balance("a") == 100 and led.balance(POOL) == 0 and pool.contributions == []


def test_contributions_held_one_step():
    led, pool = pool_ledger(a=0), PoolState()
    fund(led, pool, "a", 100, 3)
    out = pool_step(pool, led, [TEMPLATE], 3, lambda e: 0, lambda t, s: None)
    assert out.eligible == 0 and len(pool.contributions) == 1


def test_founding_shares_and_cash():
    led, pool = pool_ledger(a=0, b=0), PoolState()
    fund(led, pool, "a", 20000, 0)
    fund(led, pool, "b", 10000, 0)
    found, made = founder(led)
    out = pool_step(pool, led, [TEMPLATE], 1, lambda e: 0, found)
    assert out.founded == "firm:1"
    assert made["shares"] == {"a": 20000, "b": 10000}
    assert led.balance("firm:1") == TEMPLATE.founding_cost and led.balance(POOL) == 0
    assert led.audit().passed


def test_surplus_over_cost_refunded_pro_rata():
    led, pool = pool_ledger(a=0, b=0), PoolState()
    fund(led, pool, "a", 40000, 0)
    fund(led, pool, "b", 20000, 0)
    found, made = founder(led)
    out = pool_step(pool, led, [TEMPLATE], 1, lambda e: 0, found)
    assert made["shares"] == {"a": 20000, "b": 10000}
    assert out.refunds == {"a": 20000, "b": 10000}


@given(st.dictionaries(st.sampled_from("abcdef"), st.integers(1, 10**6), min_size=1), st.floats(0, 1))
def test_allocation_sums_to_cost_and_is_proportional(amounts, frac):
    contribs = [Contribution(o, a, 0) for o, a in amounts.items()]
    total = sum(amounts.values())
    cost = int(frac * total)
    used = allocate_shares(contribs, cost)
    assert sum(used.values()) == cost
    for o, u in used.items():
        assert u <= amounts[o] + len(amounts)
        assert abs(u - cost * amounts[o] / total) <= len(amounts)


def test_residential_goes_to_center():
    assert heuristic_cell(CityMap(5, 5), "residential") == (2, 2)
    assert heuristic_cell(CityMap(7, 3), "residential") == (3, 1)


def test_productive_goes_to_edge():
    x, y = heuristic_cell(CityMap(9, 9), "productive")
    assert x in (0, 8) or y in (0, 8)
    assert (x, y) == (0, 0)


class FixedPolicy:
    def __init__(self, cell):
        self.cell = cell

    def choose(self, city, kind):
        return self.cell


def test_remote_occupied_cell_falls_back():
    city = CityMap(5, 5)
    city.occupy((1, 1), Building(0, "productive", "firm:0", (1, 1)))
    warnings = []
    cell = place_building(city, "residential", FixedPolicy((1, 1)), warnings=warnings)
    assert cell == (2, 2) and warnings[0]["kind"] == "placement-fallback"
    assert place_building(city, "residential", FixedPolicy((4, 4))) == (4, 4)
    warnings.clear()
    assert place_building(city, "residential", FixedPolicy((9, 9)), warnings=warnings) == (2, 2)
    assert warnings
