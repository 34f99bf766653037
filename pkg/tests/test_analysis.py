import csv

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import stats

from agentecon import analysis as an
from agentecon.analysis import (CHECKLIST, DegenerateSeries, InsufficientData, NoPriceVariation, QuarterSeries,
                                RegularityReport)

from synthetic import (correlated_pair, demand_curve, mean_reverting_prices, okun_quarters, phillips_quarters,
                       volatility_series)


# estimators --------------------------------------------------------------


def test_pearson_exact_cases():
    x = np.arange(10.0)
    assert an.pearson(x, x)[0] == pytest.approx(1.0)
    assert an.pearson(x, -2 * x)[0] == pytest.approx(-1.0)
    with pytest.raises(DegenerateSeries):
        an.pearson(x, np.ones(10))


def test_pearson_planted_correlation():
    x, y = correlated_pair(-0.7, 48)
    r, p = an.pearson(x, y)
    assert -0.9 <= r <= -0.5 and p < 0.01
    ref = stats.pearsonr(x, y)
    assert r == pytest.approx(ref.statistic, abs=1e-12) and p == pytest.approx(ref.pvalue, rel=1e-9)


floats = st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=40)


@given(floats, st.data(), st.floats(0.1, 10), st.floats(-100, 100))
def test_pearson_symmetric_and_affine(x, data, a, b):
    y = data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(x), max_size=len(x)))
    assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
    r = an.pearson(x, y)[0]
    assert an.pearson(y, x)[0] == pytest.approx(r, abs=1e-9)
    xs = np.asarray(x)
    assert an.pearson(a * xs + b, y)[0] == pytest.approx(r, abs=1e-6)
    assert an.pearson(-a * xs + b, y)[0] == pytest.approx(-r, abs=1e-6)


def test_ols_cases():
    x = np.arange(12.0)
    fit = an.ols(x, 3 * x + 1)
    assert (fit.slope, fit.intercept, fit.stderr) == (pytest.approx(3), pytest.approx(1), 0.0)
    assert an.ols(x, np.full(12, 4.0)).slope == 0.0
    rng = np.random.default_rng(7)
    xs = rng.normal(0, 1, 48)
    ys = -0.4 * xs + rng.normal(0, 0.1, 48)
    fit = an.ols(xs, ys)
    assert abs(fit.slope + 0.4) <= 0.05
    ref = stats.linregress(xs, ys)
    assert fit.slope == pytest.approx(ref.slope) and fit.stderr == pytest.approx(ref.stderr)


@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=30, unique=True), st.integers(-50, 50),
       st.integers(-500, 500))
def test_ols_collinear_has_zero_residual(xs, a, b):
    x = np.asarray(xs, dtype=float)
    assert an.ols(x, a * x + b).stderr == 0.0


# quarterly regularities ----------------------------------------------------


def test_phillips_and_beveridge_planted():
    q = phillips_quarters()
    for fn in (an.phillips, an.beveridge):
        rep = fn(q)
        assert rep.verdict == "yes" and -0.9 <= rep.r <= -0.5 and rep.p < 0.01


def test_white_noise_gives_no():
    rng = np.random.default_rng(11)
    n = 48
    q = QuarterSeries(np.arange(n), rng.normal(0.08, 0.01, n), rng.normal(0.01, 0.01, n), np.full(n, 1.0),
                      rng.normal(0.05, 0.01, n), np.ones(n), np.ones(n))
    assert an.phillips(q).verdict == "no" and an.phillips(q).p >= 0.05
    assert an.beveridge(q).verdict == "no"


def test_constant_unemployment_is_insufficient():
    q = phillips_quarters()
    q.unemployment[:] = 0.05
    assert an.phillips(q).verdict == "insufficient-data"


def test_too_few_quarters():
    q = phillips_quarters(n=5)
    with pytest.raises(InsufficientData):
        an.phillips(q)


def test_okun_planted_slope():
    rep = an.okun(okun_quarters())
    assert abs(rep.slope + 0.4) <= 0.05 and rep.verdict == "yes"


def test_volatility_cases():
    c, i, g = volatility_series()
    assert an.volatility_from_series(c, i, g).verdict == "yes"
    flat = np.full(12, 5.0)
    rep = an.volatility_from_series(flat, flat, flat)
    assert rep.verdict == "no" and all(v == 0 for k, v in rep.statistics.items() if k.startswith("sd_"))
    with pytest.raises(InsufficientData):
        an.volatility_from_series([1.0], [1.0], [1.0])


def test_quarter_aggregation():
    recs = []
    for step in range(7):
        recs.append({"step": step, "phase": 2, "indicators": {
            "step": step, "unemployment": 0.1 * (step % 3), "vacancy_rate": 0.2, "inflation": 0.01,
            "real_gdp": 10.0, "consumption": 5, "investment": 2}})
    q = QuarterSeries.from_trace(recs)
    assert len(q) == 2
    assert q.unemployment[0] == pytest.approx(0.1)
    assert q.inflation[0] == pytest.approx(1.01 ** 3 - 1)
    assert q.real_gdp.tolist() == [30.0, 30.0] and q.consumption.tolist() == [15, 15]


# engel ------------------------------------------------------------------


def engel_data(share_fn, n=200):
    income = np.linspace(1000, 20000, n)
    decile = np.minimum(np.arange(n) * 10 // n, 9)
    return income, income * share_fn(decile)


def test_engel_planted():
    inc, food = engel_data(lambda d: 0.6 - 0.04 * d)
    assert an.engel_from_observations(inc, food).verdict == "yes"


def test_engel_inverted():
    inc, food = engel_data(lambda d: 0.2 + 0.04 * d)
    assert an.engel_from_observations(inc, food).verdict == "no"


def test_engel_identical_incomes():
    with pytest.raises(InsufficientData):
        an.engel_from_observations(np.full(50, 3000.0), np.full(50, 900.0))


# price elasticity -----------------------------------------------------------


def test_ped_planted():
    p, q = demand_curve()
    assert abs(an.ped_from_series(p, q).elasticity + 1.2) <= 0.15


def test_ped_constant_price():
    with pytest.raises(NoPriceVariation):
        an.ped_from_series(np.full(30, 50.0), np.linspace(1, 2, 30))


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_ped_unit_invariant(kp, kq):
    p, q = demand_curve()
    base = an.ped_from_series(p, q).elasticity
    assert an.ped_from_series(kp * p, kq * q).elasticity == pytest.approx(base, abs=1e-9)


def test_estimate_ped_reads_trace():
    p, q = demand_curve()
    recs = [{"goods": {"price": [float(pi), 1.0], "sold": [float(qi), 1.0]}} for pi, qi in zip(p, q)]
    assert an.estimate_ped(recs, 0).elasticity == pytest.approx(an.ped_from_series(p, q).elasticity)
    with pytest.raises(NoPriceVariation):
        an.estimate_ped(recs, 1)


# stickiness -----------------------------------------------------------------


def test_stickiness_cases():
    never = an.stickiness_from_panel({1: [50.0] * 24})
    assert never.statistics["change_fraction"] == 0 and never.statistics["mean_spell"] == 24
    always = an.stickiness_from_panel({1: list(np.arange(1.0, 25.0))})
    assert always.statistics["change_fraction"] == 1 and always.verdict == "no"
    alt = [1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 5.0, 5.0, 6.0, 6.0, 7.0, 7.0]
    rep = an.stickiness_from_panel({1: alt})
    assert rep.statistics["change_fraction"] == 0.5 and rep.statistics["mean_spell"] == 2.0


# impulse ------------------------------------------------------------------


def shocked_trace(goods_hit=(0,), n=48, trigger=20):
    series = mean_reverting_prices(trigger=trigger, n=n)
    recs = []
    for step in range(n):
        prices = [series[step] if g in goods_hit else 50.0 for g in range(3)]
        prices[2] = 50.0 if step < trigger else 25.0
        ev = [{"kind": "shock", "scenario": "price-impulse-down", "trigger": trigger, "goods": [0, 2],
               "factor": 0.5}] if step == trigger else []
        recs.append({"step": step, "events": ev, "goods": {"price": prices}})
    return recs


def test_impulse_months_to_return():
    rep = an.impulse_report(shocked_trace())
    by_good = {g.good: g for g in rep.goods}
    assert set(by_good) == {0, 2}
    assert by_good[0].months_to_return == 14 and not by_good[0].censored
    assert by_good[2].months_to_return is None and by_good[2].censored


def test_impulse_missing_scenario():
    with pytest.raises(an.ScenarioNotFound):
        an.impulse_report(shocked_trace(), "price-impulse-up")


# reports ------------------------------------------------------------------


def test_empty_report_is_header_only(tmp_path):
    path = an.write_report([], tmp_path / "r.csv")
    assert path.read_text() == ",".join(an.REPORT_COLUMNS) + "\n"


def test_reports_are_byte_stable(tmp_path):
    reps = [RegularityReport("phillips", "yes", 40, -0.6, 0.001, statistics={"a": 1.5})]
    for fmt in ("csv", "text"):
        a = an.write_report(reps, tmp_path / f"a.{fmt}", fmt).read_bytes()
        b = an.write_report(reps, tmp_path / f"b.{fmt}", fmt).read_bytes()
        assert a == b


def test_checklist_over_desk_run(desk_run, tmp_path):
    reports = an.analyze(desk_run.trace, tmp_path)
    assert [r.regularity for r in reports] == list(CHECKLIST)
    with open(tmp_path / "regularities.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["regularity"] for r in rows] == list(CHECKLIST)
    again = an.analyze(desk_run.trace, tmp_path / "again")
    assert [r.to_dict() for r in again] == [r.to_dict() for r in reports]
    assert (tmp_path / "regularities.csv").read_bytes() == (tmp_path / "again" / "regularities.csv").read_bytes()


def test_external_quarters(tmp_path):
    q = phillips_quarters()
    path = tmp_path / "ext.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "pi", "gdp", "v"])
        for row in zip(q.unemployment, q.inflation, q.real_gdp, q.vacancy):
            w.writerow(row)
    ext = an.load_external_quarters(path)
    assert an.phillips(ext).r == pytest.approx(an.phillips(q).r)
