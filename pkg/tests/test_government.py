from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agentecon.government import (InvalidPlan, InvalidSchedule, MissingBaseYear, StepAccounts, bracketed_tax,
                                  base_prices_from, collect_taxes, compute_indicators, gini, make_schedule, spend)
from agentecon.ledger import Ledger
from agentecon.state import GOV, FirmState, GovernmentState, HouseholdState, TaxBracket

from oracles import gini_pairs, random_schedule, tax_by_pennies

TWO = [TaxBracket(0, 0.1), TaxBracket(100000, 0.2)]


def test_bracket_examples():
    assert bracketed_tax([TaxBracket(0, 0.1)], 50000) == 5000
    assert bracketed_tax(TWO, 150000) == 20000
    assert bracketed_tax(TWO, 0) == 0


def test_schedule_validation():
    with pytest.raises(InvalidSchedule):
        make_schedule([])
    with pytest.raises(InvalidSchedule):
        make_schedule([[10, 0.1]])
    with pytest.raises(InvalidSchedule):
        make_schedule([[0, 0.1], [0, 0.2]])
    with pytest.raises(InvalidSchedule):
        make_schedule([[0, 1.5]])
    assert make_schedule([[0, 0.1], [1000, 0.2]]) == TWO


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.integers(0, 60000))
def test_bracketed_tax_matches_penny_oracle(seed, base):
    thresholds, rates = random_schedule(np.random.default_rng(seed), 60000)
    sched = [TaxBracket(t, r) for t, r in zip(thresholds, rates)]
    assert abs(bracketed_tax(sched, base) - tax_by_pennies(thresholds, rates, base)) <= 1


@given(st.integers(0, 2**32 - 1), st.integers(0, 10**6), st.integers(1, 10**5))
def test_bracketed_tax_non_decreasing(seed, base, bump):
    thresholds, rates = random_schedule(np.random.default_rng(seed), 10**6)
    sched = [TaxBracket(t, r) for t, r in zip(thresholds, rates)]
    assert bracketed_tax(sched, base + bump) >= bracketed_tax(sched, base)


def hh_with_income(hid, salary):
    h = HouseholdState(id=hid, name="h", age=30, skills={}, essential_needs={}, additional_needs={})
    h.month.salary = salary
    return h


def fiscal_ledger(households, firms=(), cash=10**7):
    led = Ledger()
    led.open(GOV)
    for h in households:
        led.open(h.cash_account, cash)
        led.open(h.deposit_account)
    for f in firms:
        led.open(f.cash_account, cash)
    return led


def test_collect_taxes_examples():
    gov = GovernmentState(TWO, [TaxBracket(0, 0.1)])
    quiet = {0: hh_with_income(0, 0)}
    assert collect_taxes(quiet, {}, gov, fiscal_ledger(quiet.values())).revenue == 0
    one = {0: hh_with_income(0, 150000)}
    led = fiscal_ledger(one.values())
    assert collect_taxes(one, {}, gov, led).revenue == 20000
    assert led.balance(GOV) == 20000 and led.audit().passed
    f = FirmState(id=1, kind="productive", template_id=0, good=0, tfp=1, alpha=0.5, recipe={}, price=1,
                  location=(0, 0), shareholders={"gov": 1})
    f.book.revenue, f.book.input_cost = 100000, 120000
    assert collect_taxes({}, {1: f}, gov, fiscal_ledger([], [f])).revenue == 0


def test_spend_examples():
    hs = {i: hh_with_income(i, 0) for i in range(3)}
    gov = GovernmentState(TWO, TWO, ubi_share=1.0, public_share=0.0, reserve_share=0.0)
    led = fiscal_ledger(hs.values(), cash=0)
    led.mint_interest(GOV, 100000)
    rep = spend(gov, 100000, hs, led)
    assert rep.ubi_each == 33333 and rep.reserved == 1
    assert [led.balance(h.cash_account) for h in hs.values()] == [33333] * 3 and led.balance(GOV) == 1

    gov = GovernmentState(TWO, TWO, ubi_share=0.0, public_share=0.0, reserve_share=1.0)
    led = fiscal_ledger(hs.values(), cash=0)
    led.mint_interest(GOV, 5000)
    assert spend(gov, 5000, hs, led).reserved == 5000 and led.balance(GOV) == 5000

    with pytest.raises(InvalidPlan):
        spend(GovernmentState(TWO, TWO, 0.6, 0.3, 0.3), 0, hs, led)


def test_gini_examples():
    assert gini([7, 7, 7, 7]) == pytest.approx(0, abs=1e-12)
    assert gini([0, 10]) == pytest.approx(0.5, abs=1e-12)
    assert gini([0] * 99 + [1]) == pytest.approx(0.99, abs=1e-12)


vec = st.lists(st.floats(0, 1e6), min_size=2, max_size=50).filter(lambda v: sum(v) > 0)


@given(vec, st.floats(1e-3, 1e3), st.randoms())
def test_gini_scale_and_permutation_invariant(values, lam, rnd):
    g = gini(values)
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert gini([lam * v for v in values]) == pytest.approx(g, abs=1e-12)
    assert gini(shuffled) == pytest.approx(g, abs=1e-12)
    assert g == pytest.approx(gini_pairs(values), abs=1e-9)


def accounts(c=10000, i=5000, g=2500, employed=10, labor_force=10, vacancies=0, positions=10):
    # consumption spread over goods 0 and 1; investment on good 2; government priced by good 3
    return StepAccounts(
        step=12, phase=2, consumption=c, investment=i, government=g,
        final_sales={0: (2.0, c // 2), 1: (4.0, c - c // 2), 2: (1.0, i)},
        posted_prices={k: Fraction(5000) for k in range(4)}, gov_price_good=3,
        salaries=0, wealth=[1.0, 2.0], income=[1.0, 3.0], unemployed=labor_force - employed,
        labor_force=labor_force, vacancies=vacancies, positions=positions, m0=0, deposits=0, production={},
        population=labor_force, firms=1, supply=0, minted=0, policy_rate=0.04)


def test_indicator_identities_at_base_year():
    acc = accounts()
    frame = compute_indicators(acc, base_prices_from(acc, 4), None)
    assert frame.nominal_gdp == 17500
    assert frame.deflator == 1.0
    assert frame.unemployment == 0.0


def test_indicators_need_base_when_required():
    with pytest.raises(MissingBaseYear):
        compute_indicators(accounts(), None, None, require_base=True)


@given(st.integers(0, 10**7), st.integers(0, 10**7), st.integers(0, 10**7), st.integers(0, 50),
       st.integers(0, 50), st.integers(0, 50))
def test_indicator_bounds_and_gdp_identity(c, i, g, employed, extra, vac):
    lf = employed + extra
    acc = accounts(c, i, g, employed, lf, vac, vac + extra)
    f = compute_indicators(acc, None, None)
    assert f.nominal_gdp == c + i + g
    assert 0 <= f.unemployment <= 1 and 0 <= f.vacancy_rate <= 1
