import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agentecon import markets
from agentecon.ledger import Ledger
from agentecon.markets import (CreditLimitExceeded, GoodsDemand, GoodsOffer, NotEmployed, OverRepay, StaleOffer,
                               Vacancy, accept_offer, accrue_interest, borrow, clear_goods_market, collect_rent,
                               firm_credit_limit, layoff, make_offer, match_housing, match_labor, repay, resign,
                               set_wage, apply_pending_wages)
from agentecon.state import BANK, FirmState, HouseholdState, RateSchedule


def hh(hid, skill_level=1.0, skill="welding"):
    return HouseholdState(id=hid, name=f"H{hid}", age=30, skills={skill: skill_level},
                          essential_needs={}, additional_needs={})


def firm(fid, kind="productive", price=5000, location=(0, 0), units=0, good=0):
    return FirmState(id=fid, kind=kind, template_id=0, good=good, tfp=1.0, alpha=0.5, recipe={}, price=price,
                     location=location, shareholders={"gov": 1}, units=units)


def gen(seed=0):
    return np.random.default_rng(seed)


# labor ------------------------------------------------------------------


def test_no_vacancies_no_offers():
    assert match_labor([hh(0)], [], gen()) == []


def test_full_skill_always_matched():
    vac = [Vacancy(1, 0, "welding", 300000)]
    for seed in range(50):
        assert len(match_labor([hh(0, 1.5)], vac, gen(seed))) == 1


def test_match_rate_monte_carlo():
    vac = [Vacancy(1, 0, "welding", 300000)]
    g = gen(12345)
    hits = sum(len(match_labor([hh(0, 0.75)], vac, g)) for _ in range(10_000))
    assert abs(hits / 10_000 - 0.5) <= 0.02


def test_accept_resign_layoff_cycle():
    f = firm(1)
    pos = f.add_position("welding", 300000)
    firms = {1: f}
    a, b = hh(0), hh(1)
    make_offer(a, Vacancy(1, pos.id, "welding", 300000))
    assert a.labor == 0
    accept_offer(a, firms)
    assert a.labor == 1 and pos.occupant == 0
    layoff(f, a)
    assert a.labor == 0 and pos.occupant is None
    make_offer(b, Vacancy(1, pos.id, "welding", 300000))
    accept_offer(b, firms)
    assert pos.occupant == 1
    with pytest.raises(NotEmployed):
        resign(a, firms)


def test_stale_offer_for_taken_position():
    f = firm(1)
    pos = f.add_position("welding", 300000)
    a, b = hh(0), hh(1)
    for h in (a, b):
        make_offer(h, Vacancy(1, pos.id, "welding", 300000))
    accept_offer(a, {1: f})
    with pytest.raises(StaleOffer):
        accept_offer(b, {1: f})


def test_wage_change_applies_next_step():
    f = firm(1)
    pos = f.add_position("welding", 300000)
    a = hh(0)
    make_offer(a, Vacancy(1, pos.id, "welding", 300000))
    accept_offer(a, {1: f})
    set_wage(f, pos.id, 330000)
    assert a.employment.salary == 300000
    apply_pending_wages(f, {0: a})
    assert pos.salary == 330000 and a.employment.salary == 330000


@settings(max_examples=100)
@given(st.integers(0, 12), st.integers(0, 12), st.integers(0, 10**6))
def test_one_job_per_household_one_occupant_per_position(n_hh, n_pos, seed):
    f = firm(1)
    for _ in range(n_pos):
        f.add_position("welding", 300000)
    households = {i: hh(i, 1.5) for i in range(n_hh)}
    offers = match_labor(list(households.values()), markets.open_vacancies({1: f}), gen(seed))
    assert len({h for h, _ in offers}) == len(offers)
    assert len({v.position_id for _, v in offers}) == len(offers)
    for hid, vac in offers:
        make_offer(households[hid], vac)
        accept_offer(households[hid], {1: f})
    occupants = [p.occupant for p in f.positions if p.occupant is not None]
    assert len(occupants) == len(set(occupants))


# goods ------------------------------------------------------------------


def goods_ledger(**balances):
    led = Ledger()
    for k, v in balances.items():
        led.open(k.replace("_", ":"), v)
    return led


def test_greedy_fill_cheapest_first():
    led = goods_ledger(hh_0=100000, firm_1=0, firm_2=0)
    offers = [GoodsOffer(1, 0, 1000, 3, (0, 0)), GoodsOffer(2, 0, 1500, 10, (0, 0))]
    res = clear_goods_market(offers, [GoodsDemand("hh:0", 0, 5, 100000)], gen(), led)
    assert [(t.seller, t.units, t.value) for t in res.trades] == [(1, 3, 3000), (2, 2, 3000)]
    assert led.balance("hh:0") == 94000 and offers[0].stock == 0 and offers[1].stock == 8


def test_zero_budget_buys_nothing():
    led = goods_ledger(hh_0=100000, firm_1=0)
    res = clear_goods_market([GoodsOffer(1, 0, 1000, 3, (0, 0))], [GoodsDemand("hh:0", 0, 5, 0)], gen(), led)
    assert res.trades == []


def test_equal_price_nearer_seller_wins():
    led = goods_ledger(hh_0=100000, firm_1=0, firm_2=0)
    offers = [GoodsOffer(1, 0, 1000, 10, (5, 0)), GoodsOffer(2, 0, 1000, 10, (2, 0))]
    res = clear_goods_market(offers, [GoodsDemand("hh:0", 0, 1, 100000, location=(0, 0))], gen(), led)
    assert [t.seller for t in res.trades] == [2]


def test_budget_caps_units():
    led = goods_ledger(hh_0=100000, firm_1=0)
    res = clear_goods_market([GoodsOffer(1, 0, 1000, 10, (0, 0))], [GoodsDemand("hh:0", 0, 5, 2500)], gen(), led)
    assert res.trades[0].units == pytest.approx(2.5) and res.trades[0].value == 2500


def test_essential_pass_served_first():
    led = goods_ledger(hh_0=10**6, hh_1=10**6, firm_1=0)
    offers = [GoodsOffer(1, 0, 1000, 4, (0, 0))]
    demands = [GoodsDemand("hh:0", 0, 4, 10**6, essential=False), GoodsDemand("hh:1", 0, 4, 10**6, essential=True)]
    res = clear_goods_market(offers, demands, gen(), led)
    assert [(t.buyer, t.units) for t in res.trades] == [("hh:1", 4)]


demand_st = st.lists(st.tuples(st.integers(0, 4), st.integers(0, 2), st.floats(0, 20), st.integers(0, 10**5),
                               st.booleans()), max_size=15)
offer_st = st.lists(st.tuples(st.integers(0, 2), st.integers(1, 5000), st.floats(0, 20)), max_size=8)


def _market(offer_specs, demand_specs):
    led = Ledger()
    for i in range(5):
        led.open(f"hh:{i}", 50000)
    offers = []
    for k, (good, price, stock) in enumerate(offer_specs):
        led.open(f"firm:{k}")
        offers.append(GoodsOffer(k, good, price, stock, (k, 0)))
    demands = [GoodsDemand(f"hh:{b}", g, u, bud, ess) for b, g, u, bud, ess in demand_specs]
    return led, offers, demands


@settings(max_examples=200)
@given(offer_st, demand_st, st.integers(0, 1000))
def test_clearing_conserves_goods_and_money(offer_specs, demand_specs, seed):
    led, offers, demands = _market(offer_specs, demand_specs)
    before = {o.seller: o.stock for o in offers}
    posted = {o.seller: o.price for o in offers}
    res = clear_goods_market(offers, demands, gen(seed), led)
    for o in offers:
        bought = sum(t.units for t in res.trades if t.seller == o.seller)
        assert before[o.seller] - o.stock == pytest.approx(bought, abs=1e-9)
        assert o.stock >= 0
    assert all(t.price == posted[t.seller] for t in res.trades)
    assert led.audit().passed
    assert all(b >= 0 for b in led.balances.values())


@settings(max_examples=50)
@given(offer_st, demand_st, st.integers(0, 1000))
def test_clearing_is_deterministic(offer_specs, demand_specs, seed):
    runs = []
    for _ in range(2):
        led, offers, demands = _market(offer_specs, demand_specs)
        runs.append(clear_goods_market(offers, demands, gen(seed), led).trades)
    assert runs[0] == runs[1]


@settings(max_examples=100)
@given(st.lists(st.floats(0.01, 5), min_size=1, max_size=6), st.floats(0, 40), st.integers(0, 100))
def test_essential_demand_fully_served_when_stock_suffices(needs, stock, seed):
    # needs of at least 0.01 units at 50.00 are worth at least 50 cents
    led = Ledger()
    led.open("firm:0")
    demands = []
    for i, n in enumerate(needs):
        led.open(f"hh:{i}", 10**7)
        demands.append(GoodsDemand(f"hh:{i}", 0, n, 10**7, essential=True))
    offers = [GoodsOffer(0, 0, 5000, stock, (0, 0))]
    res = clear_goods_market(offers, demands, gen(seed), led)
    if stock >= sum(needs):
        for i, n in enumerate(needs):
            got = sum(t.units for t in res.trades if t.buyer == f"hh:{i}")
            assert got == pytest.approx(n, abs=1e-6)


def test_sub_cent_purchase_does_not_execute():
    led = goods_ledger(hh_0=100, firm_1=0)
    res = clear_goods_market([GoodsOffer(1, 0, 100, 1, (0, 0))], [GoodsDemand("hh:0", 0, 0.004, 100)], gen(), led)
    assert res.trades == [] and res.unmet == [("hh:0", 0, 0.004, "consumption")]


# housing ----------------------------------------------------------------


def housing_ledger(*hids, cash=10**6):
    led = Ledger()
    for h in hids:
        led.open(f"hh:{h}", cash)
        led.open(f"dep:hh:{h}")
    return led


def test_one_unit_two_applicants_seeded_order():
    b = firm(5, "residential", price=50000, units=1)
    a, c = hh(0), hh(1)
    led = housing_ledger(0, 1)
    order = np.random.default_rng(3).permutation(2)
    first = [a, c][order[0]]
    res = match_housing([a, c], {5: b}, np.random.default_rng(3), led)
    assert res.assignments == [(first.id, 5)]
    assert len(res.unhoused) == 1


def test_unaffordable_leaves_household_unhoused():
    b = firm(5, "residential", price=50000, units=3)
    a = hh(0)
    led = housing_ledger(0, cash=100)
    res = match_housing([a], {5: b}, gen(), led)
    assert res.assignments == [] and res.unhoused == [0] and a.residence is None


def test_two_months_arrears_evicts():
    b = firm(5, "residential", price=50000, units=3)
    a = hh(0)
    led = housing_ledger(0, cash=60000)
    led.open(b.cash_account)
    match_housing([a], {5: b}, gen(), led)
    assert collect_rent({0: a}, {5: b}, led, step=0)[1] == []
    assert collect_rent({0: a}, {5: b}, led, step=1)[1] == []
    assert a.arrears == 1
    payments, evicted = collect_rent({0: a}, {5: b}, led, step=2)
    assert evicted == [0] and a.residence is None and a.evicted_at == 2 and 0 not in b.tenants


# finance ----------------------------------------------------------------


def finance_ledger():
    led = Ledger()
    for acct in (BANK, "hh:0", "dep:hh:0", "loan:hh:0"):
        led.open(acct)
    return led


def test_deposit_interest():
    led = finance_ledger()
    led.mint_interest("dep:hh:0", 1_200_000)
    out = accrue_interest(led, RateSchedule(0.06, 0.06, 0.08, 0.02))
    assert out["dep:hh:0"] == 6000 and led.balance("dep:hh:0") == 1_206_000


def test_zero_rate_no_interest():
    led = finance_ledger()
    led.mint_interest("dep:hh:0", 1_200_000)
    assert accrue_interest(led, RateSchedule(0, 0, 0, 0))["dep:hh:0"] == 0


def test_loan_interest_capitalizes():
    led = finance_ledger()
    borrow(led, "hh:0", "loan:hh:0", 1_000_000, limit=10**9)
    out = accrue_interest(led, RateSchedule.from_policy(0.06, 0.02))
    assert out["loan:hh:0"] == 6667
    assert markets.outstanding(led, "loan:hh:0") == 1_006_667
    assert led.audit().passed


def test_borrow_and_repay():
    led = finance_ledger()
    borrow(led, "hh:0", "loan:hh:0", 10000, limit=10**6)
    assert led.balance("hh:0") == 10000 and markets.outstanding(led, "loan:hh:0") == 10000
    repay(led, "hh:0", "loan:hh:0", 10000)
    assert markets.outstanding(led, "loan:hh:0") == 0
    with pytest.raises(OverRepay):
        repay(led, "hh:0", "loan:hh:0", 1)


def test_firm_credit_limit():
    led = finance_ledger()
    limit = firm_credit_limit(100000)
    borrow(led, "hh:0", "loan:hh:0", 50000, limit)
    with pytest.raises(CreditLimitExceeded):
        borrow(led, "hh:0", "loan:hh:0", 1, limit)


@given(st.lists(st.integers(0, 10**8), min_size=1, max_size=10), st.floats(0, 0.2))
def test_minted_interest_equals_sum_of_deposit_interest(deposits, rate):
    led = Ledger()
    led.open(BANK)
    for i, d in enumerate(deposits):
        led.open(f"dep:hh:{i}", d)
    out = accrue_interest(led, RateSchedule(rate, rate, rate, 0))
    assert led.minted == sum(out.values())
    assert led.audit().passed
