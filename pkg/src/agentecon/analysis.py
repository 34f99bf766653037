"""Stylized-facts harness: quarterly aggregation, estimators and the regularity checklist.

Every estimator has a pure array form (used by the synthetic fixtures) and a
trace adapter. Reports carry the statistics their verdicts derive from.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import special, stats

from .trace import Trace

REPORT_SCHEMA = 1
QUARTER = 3
MIN_QUARTERS = 8
ALPHA = 0.05
CHECKLIST = ("phillips", "okun", "beveridge", "ped", "engel", "volatility", "stickiness")
REPORT_COLUMNS = ("regularity", "verdict", "r", "p", "slope", "stderr", "n", "statistics", "note")


class AnalysisError(ValueError):
    pass


class DegenerateSeries(AnalysisError):
    pass


class InsufficientData(AnalysisError):
    pass


class NoPriceVariation(AnalysisError):
    pass


class ScenarioNotFound(AnalysisError):
    pass


# ---------------------------------------------------------------------- estimators


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson r and two-sided Student-t p-value with n - 2 degrees of freedom."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateSeries("series must be one-dimensional and of equal length")
    n = len(x)
    if n < 3:
        raise DegenerateSeries(f"need at least 3 points, got {n}")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if np.ptp(x) == 0 or np.ptp(y) == 0 or sxx == 0 or syy == 0:
        raise DegenerateSeries("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        return r, 0.0
    t2 = r * r * df / (1.0 - r * r)
    # P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)
    p = float(special.betainc(df / 2.0, 0.5, df / (df + t2)))
    return r, p


@dataclass(frozen=True)
class OLSResult:
    slope: float
    intercept: float
    stderr: float
    n: int


def ols(x: Sequence[float], y: Sequence[float]) -> OLSResult:
    """Least squares y = a + b x; ``stderr`` is the standard error of the slope."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 3 or len(y) != n:
        raise DegenerateSeries(f"need at least 3 paired points, got {n}")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if np.ptp(x) == 0 or sxx == 0:
        raise DegenerateSeries("zero variance in x")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ssr = float(resid @ resid)
    scale = max(float(np.abs(y).max()), 1.0)
    if ssr <= (1e-12 * scale) ** 2 * n:
        ssr = 0.0
    stderr = math.sqrt(ssr / (n - 2) / sxx)
    return OLSResult(slope, intercept, stderr, n)


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3 or np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateSeries("Spearman needs 3+ points with variation")
    res = stats.spearmanr(x, y)
    return float(res.statistic), float(res.pvalue)


# ---------------------------------------------------------------------- quarterly data


@dataclass
class QuarterSeries:
    """One row per complete quarter. Money columns are in cents."""
    start: np.ndarray  # first step of each quarter
    unemployment: np.ndarray  # mean within quarter
    inflation: np.ndarray  # compounded deflator inflation within quarter
    real_gdp: np.ndarray  # summed
    vacancy: np.ndarray  # mean
    consumption: np.ndarray  # summed
    investment: np.ndarray  # summed

    def __post_init__(self):
        for name in ("start", "unemployment", "inflation", "real_gdp", "vacancy", "consumption", "investment"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.unemployment)
        if any(len(getattr(self, k)) != n for k in ("inflation", "real_gdp", "vacancy", "consumption",
                                                       "investment")):
            raise AnalysisError("quarter columns differ in length")

    def __len__(self) -> int:
        return len(self.unemployment)

    @property
    def growth(self) -> np.ndarray:
        """Quarter-on-quarter log growth of real GDP (length n - 1)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.diff(np.log(self.real_gdp))

    @classmethod
    def from_trace(cls, trace: Trace | Sequence[dict], phase: Optional[int] = 2) -> "QuarterSeries":
        """Aggregate step records into quarters, starting at the first step of ``phase``.

        Unemployment and vacancies are averaged, inflation compounded, flows
        summed. A partial trailing quarter is dropped.
        """
        records = _records(trace)
        if phase is not None:
            records = [r for r in records if r.get("phase") == phase]
        rows = [r["indicators"] for r in records]
        n = len(rows) // QUARTER
        cols: dict[str, list] = {k: [] for k in ("start", "unemployment", "inflation", "real_gdp", "vacancy",
                                                 "consumption", "investment")}
        for q in range(n):
            chunk = rows[q * QUARTER:(q + 1) * QUARTER]
            cols["start"].append(chunk[0]["step"])
            cols["unemployment"].append(float(np.mean([c["unemployment"] for c in chunk])))
            cols["vacancy"].append(float(np.mean([c["vacancy_rate"] for c in chunk])))
            growth = 1.0
            for c in chunk:
                if c.get("inflation") is not None:
                    growth *= 1.0 + c["inflation"]
            cols["inflation"].append(growth - 1.0)
            cols["real_gdp"].append(sum(c["real_gdp"] or 0.0 for c in chunk))
            cols["consumption"].append(sum(c["consumption"] for c in chunk))
            cols["investment"].append(sum(c["investment"] for c in chunk))
        return cls(**cols)

    def to_rows(self) -> list[dict]:
        g = np.concatenate([[np.nan], self.growth]) if len(self) else np.array([])
        return [{"quarter": i, "start_step": int(self.start[i]), "unemployment": self.unemployment[i],
                 "inflation": self.inflation[i], "real_gdp": self.real_gdp[i], "real_gdp_growth": g[i],
                 "vacancy_rate": self.vacancy[i], "consumption": self.consumption[i],
                 "investment": self.investment[i]} for i in range(len(self))]


def load_external_quarters(path: str | Path) -> QuarterSeries:
    """Read an external quarterly CSV with columns u, pi (or inflation), gdp and v.

    Optional ``consumption`` and ``investment`` columns feed the volatility check.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise AnalysisError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InsufficientData(f"{path} has no rows")
    keys = {k.strip().lower(): k for k in rows[0]}

    def col(*names, default=None):
        for nm in names:
            if nm in keys:
                try:
                    return [float(r[keys[nm]]) for r in rows]
                except ValueError as exc:
                    raise AnalysisError(f"non-numeric value in column {nm}: {exc}") from exc
        if default is not None:
            return default
        raise AnalysisError(f"{path} lacks a column among {names}")

    n = len(rows)
    return QuarterSeries(start=list(range(n)), unemployment=col("u", "unemployment"),
                         inflation=col("pi", "inflation"), real_gdp=col("gdp", "real_gdp"),
                         vacancy=col("v", "vacancy", "vacancy_rate"),
                         consumption=col("consumption", "c", default=[math.nan] * n),
                         investment=col("investment", "i", default=[math.nan] * n))


# ---------------------------------------------------------------------- reports


@dataclass
class RegularityReport:
    regularity: str
    verdict: str  # yes | no | insufficient-data
    n: int = 0
    r: Optional[float] = None
    p: Optional[float] = None
    slope: Optional[float] = None
    stderr: Optional[float] = None
    statistics: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _verdict(ok: bool) -> str:
    return "yes" if ok else "no"


def _need_quarters(q: QuarterSeries) -> None:
    if len(q) < MIN_QUARTERS:
        raise InsufficientData(f"need {MIN_QUARTERS} quarters, have {len(q)}")


def _negative_correlation(name: str, x, y, **extra) -> RegularityReport:
    try:
        r, p = pearson(x, y)
    except DegenerateSeries as exc:
        return RegularityReport(name, "insufficient-data", n=len(x), note=str(exc))
    return RegularityReport(name, _verdict(r < 0 and p < ALPHA), n=len(x), r=r, p=p, **extra)


def phillips(q: QuarterSeries) -> RegularityReport:
    """Unemployment against quarterly inflation, in levels."""
    _need_quarters(q)
    return _negative_correlation("phillips", q.unemployment, q.inflation)


def okun(q: QuarterSeries) -> RegularityReport:
    """Change in unemployment against real GDP growth, with the OLS slope of du on growth."""
    _need_quarters(q)
    du, g = np.diff(q.unemployment), q.growth
    keep = np.isfinite(g)
    du, g = du[keep], g[keep]
    rep = _negative_correlation("okun", g, du)
    if rep.verdict != "insufficient-data":
        fit = ols(g, du)
        rep.slope, rep.stderr = fit.slope, fit.stderr
        rep.statistics = {"intercept": fit.intercept}
    return rep


def beveridge(q: QuarterSeries) -> RegularityReport:
    _need_quarters(q)
    return _negative_correlation("beveridge", q.unemployment, q.vacancy)


def volatility_from_series(consumption, investment, gdp) -> RegularityReport:
    """Standard deviation of log differences; verdict yes iff sd(I) > sd(GDP) > sd(C)."""
    sds = {}
    n = len(gdp)
    if n < MIN_QUARTERS:
        raise InsufficientData(f"need {MIN_QUARTERS} quarters, have {n}")
    for name, series in (("consumption", consumption), ("investment", investment), ("gdp", gdp)):
        s = np.asarray(series, dtype=float)
        pairs = (s[1:] > 0) & (s[:-1] > 0)
        if pairs.sum() < 2:
            return RegularityReport("volatility", "insufficient-data", n=n,
                                    note=f"{name} has fewer than two positive quarter pairs")
        sds[name] = float(np.std(np.log(s[1:][pairs]) - np.log(s[:-1][pairs]), ddof=1))
    ok = sds["investment"] > sds["gdp"] > sds["consumption"]
    stats_ = {f"sd_{k}": v for k, v in sds.items()}
    if sds["gdp"] > 0:
        stats_["ratio_investment_gdp"] = sds["investment"] / sds["gdp"]
        stats_["ratio_consumption_gdp"] = sds["consumption"] / sds["gdp"]
    return RegularityReport("volatility", _verdict(ok), n=n, statistics=stats_)


def volatility(q: QuarterSeries) -> RegularityReport:
    return volatility_from_series(q.consumption, q.investment, q.real_gdp)


def engel_from_observations(income: Sequence[float], food: Sequence[float],
                            min_obs: int = 20) -> RegularityReport:
    """Food share and food spend by income decile.

    Verdict yes iff Spearman(decile, share) < 0 with p < 0.05 and
    Spearman(decile, food spend) > 0.
    """
    income = np.asarray(income, dtype=float)
    food = np.asarray(food, dtype=float)
    keep = income > 0
    income, food = income[keep], food[keep]
    if len(income) < min_obs:
        raise InsufficientData(f"need {min_obs} household-month observations, have {len(income)}")
    # deciles by rank so ties fall into the same bin
    ranks = stats.rankdata(income, method="min") - 1
    decile = np.minimum((ranks * 10) // len(income), 9).astype(int)
    present = sorted(set(decile.tolist()))
    if len(present) < 3:
        raise InsufficientData(f"only {len(present)} distinct income decile(s)")
    share = np.array([np.mean(food[decile == d] / income[decile == d]) for d in present])
    spend = np.array([np.mean(food[decile == d]) for d in present])
    stats_ = {"deciles": present, "food_share": share.tolist(), "food_spend": spend.tolist()}
    try:
        rs, ps = spearman(present, share)
        ra, pa = spearman(present, spend)
    except DegenerateSeries as exc:
        return RegularityReport("engel", "insufficient-data", n=len(income), statistics=stats_, note=str(exc))
    stats_.update({"spearman_spend": ra, "p_spend": pa})
    return RegularityReport("engel", _verdict(rs < 0 and ps < ALPHA and ra > 0), n=len(income), r=rs, p=ps,
                            statistics=stats_)


def engel(trace: Trace | Sequence[dict]) -> RegularityReport:
    inc, food = [], []
    for rec in _records(trace):
        for h in rec.get("households", []):
            inc.append(h["income"])
            food.append(h["food"])
    return engel_from_observations(inc, food)


@dataclass(frozen=True)
class PEDResult:
    elasticity: float
    stderr: float
    n: int


def ped_from_series(prices: Sequence[float], quantities: Sequence[float], min_changes: int = 12) -> PEDResult:
    """OLS of dlog Q on dlog P, skipping periods where the price did not move."""
    p = np.asarray(prices, dtype=float)
    q = np.asarray(quantities, dtype=float)
    ok = (p[1:] > 0) & (p[:-1] > 0) & (q[1:] > 0) & (q[:-1] > 0)
    dlp = np.log(p[1:][ok]) - np.log(p[:-1][ok])
    dlq = np.log(q[1:][ok]) - np.log(q[:-1][ok])
    moved = dlp != 0
    if not moved.any():
        raise NoPriceVariation("price never changes")
    if moved.sum() < min_changes:
        raise InsufficientData(f"need {min_changes} periods with price changes, have {int(moved.sum())}")
    try:
        fit = ols(dlp[moved], dlq[moved])
    except DegenerateSeries as exc:
        raise NoPriceVariation(str(exc)) from exc
    return PEDResult(fit.slope, fit.stderr, int(moved.sum()))


def estimate_ped(trace: Trace | Sequence[dict], good: int) -> PEDResult:
    recs = _records(trace)
    return ped_from_series([r["goods"]["price"][good] for r in recs], [r["goods"]["sold"][good] for r in recs])


def ped_report(trace: Trace | Sequence[dict], names: Optional[Sequence[str]] = None) -> RegularityReport:
    """Per-good elasticities; verdict yes iff the median over estimable goods is negative."""
    recs = _records(trace)
    if not recs:
        raise InsufficientData("empty trace")
    n_goods = len(recs[0]["goods"]["price"])
    per_good = {}
    for g in range(n_goods):
        try:
            res = estimate_ped(recs, g)
        except (NoPriceVariation, InsufficientData):
            continue
        per_good[names[g] if names else str(g)] = res.elasticity
    if not per_good:
        return RegularityReport("ped", "insufficient-data", note="no good has enough price changes")
    med = float(np.median(list(per_good.values())))
    return RegularityReport("ped", _verdict(med < 0), n=len(per_good), slope=med,
                            statistics={"elasticity": per_good})


def stickiness_from_panel(panel: dict, min_months: int = 12) -> RegularityReport:
    """Share of month-to-month transitions in which a firm's posted price moved.

    A firm's spell length is transitions / changes, or its whole observed span
    when the price never moves; the report gives the mean over firms.
    """
    transitions = changes = months = 0
    spells = []
    longest = 0
    for _, series in sorted(panel.items(), key=lambda kv: str(kv[0])):
        s = list(series)
        if not s:
            continue
        c = sum(1 for a, b in zip(s, s[1:]) if a != b)
        months += len(s)
        transitions += len(s) - 1
        changes += c
        spells.append((len(s) - 1) / c if c else float(len(s)))
        longest = max(longest, len(s))
    if longest < min_months:
        raise InsufficientData(f"need {min_months} months of firm prices, longest series has {longest}")
    frac = changes / transitions
    return RegularityReport("stickiness", _verdict(frac < 1.0), n=months,
                            statistics={"change_fraction": frac, "mean_spell": float(np.mean(spells)),
                                        "firms": len(spells)})


def stickiness(trace: Trace | Sequence[dict]) -> RegularityReport:
    panel: dict[int, list] = {}
    for rec in _records(trace):
        for f in rec.get("firms", []):
            if f["kind"] == "residential":
                continue
            # a gap (firm absent) never happens for live firms; ids are never reused
            panel.setdefault(f["id"], []).append(f["price"])
    return stickiness_from_panel(panel)


# ---------------------------------------------------------------------- shocks


@dataclass
class ImpulseGood:
    good: int
    pre_mean: float
    months_to_return: Optional[int]
    censored: bool
    trajectory: list


@dataclass
class ImpulseReport:
    scenario: str
    trigger: int
    factor: float
    goods: list[ImpulseGood]

    def to_dict(self) -> dict:
        return asdict(self)


def months_to_return(series: Sequence[float], trigger: int, window: int = 12,
                     band: float = 0.10) -> tuple[float, Optional[int]]:
    """Pre-shock mean over ``window`` months and the first month k >= 0 after
    ``trigger`` with the price within ``band`` of that mean (None if never)."""
    s = np.asarray(series, dtype=float)
    lo = max(0, trigger - window)
    if trigger - lo < 1:
        raise InsufficientData("no pre-shock months")
    pre = float(np.mean(s[lo:trigger]))
    for k, v in enumerate(s[trigger:]):
        if abs(v - pre) <= band * abs(pre):
            return pre, k
    return pre, None


def impulse_report(trace: Trace | Sequence[dict], scenario: Optional[str] = None,
                   window: int = 12, band: float = 0.10) -> ImpulseReport:
    recs = _records(trace)
    shock = None
    for rec in recs:
        for ev in rec.get("events", []):
            if ev.get("kind") == "shock" and ev.get("goods") and (scenario is None or ev["scenario"] == scenario):
                shock = ev
                break
        if shock:
            break
    if shock is None:
        raise ScenarioNotFound(f"no {scenario or 'price'} shock in trace")
    first = recs[0]["step"]
    trig = shock["trigger"] - first
    goods = []
    for g in shock["goods"]:
        series = [r["goods"]["price"][g] for r in recs]
        pre, k = months_to_return(series, trig, window, band)
        goods.append(ImpulseGood(g, pre, k, k is None, series[trig:]))
    return ImpulseReport(shock["scenario"], shock["trigger"], shock["factor"], goods)


# ---------------------------------------------------------------------- checklist and output


def run_checklist(trace: Trace | Sequence[dict], only: Optional[Iterable[str]] = None,
                  names: Optional[Sequence[str]] = None) -> list[RegularityReport]:
    """All seven regularity rows, in checklist order; missing data becomes an insufficient-data row."""
    wanted = list(CHECKLIST) if only is None else [w for w in CHECKLIST if w in set(only)]
    q = QuarterSeries.from_trace(trace)
    table = {"phillips": lambda: phillips(q), "okun": lambda: okun(q), "beveridge": lambda: beveridge(q),
             "ped": lambda: ped_report(trace, names), "engel": lambda: engel(trace),
             "volatility": lambda: volatility(q), "stickiness": lambda: stickiness(trace)}
    out = []
    for name in wanted:
        try:
            out.append(table[name]())
        except (InsufficientData, DegenerateSeries, NoPriceVariation) as exc:
            out.append(RegularityReport(name, "insufficient-data", note=str(exc)))
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    return obj


def write_report(reports: Sequence[RegularityReport], path: str | Path, fmt: str = "csv") -> Path:
    """Write reports as CSV (one row per regularity) or as structured JSON text."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(REPORT_COLUMNS)
                for rep in reports:
                    d = rep.to_dict()
                    d["statistics"] = json.dumps(_jsonable(d["statistics"]), sort_keys=True)
                    w.writerow([_fmt(d[c]) for c in REPORT_COLUMNS])
        elif fmt in ("text", "json", "structured-text"):
            doc = {"schema": REPORT_SCHEMA, "reports": [_jsonable(r.to_dict()) for r in reports]}
            path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
        else:
            raise AnalysisError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise AnalysisError(f"cannot write {path}: {exc}") from exc
    return path


def write_quarters(q: QuarterSeries, path: str | Path) -> Path:
    path = Path(path)
    rows = q.to_rows()
    cols = ("quarter", "start_step", "unemployment", "inflation", "real_gdp", "real_gdp_growth", "vacancy_rate",
            "consumption", "investment")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_fmt(row[c]) if not isinstance(row[c], (int, np.integer)) else row[c] for c in cols])
    return path


def write_impulse(report: ImpulseReport, path: str | Path) -> Path:
    """Long-format CSV: one row per (good, month since the shock)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "trigger", "good", "pre_mean", "months_to_return", "censored", "month", "price"))
        for g in report.goods:
            for k, price in enumerate(g.trajectory):
                w.writerow((report.scenario, report.trigger, g.good, repr(g.pre_mean),
                            "" if g.months_to_return is None else g.months_to_return, int(g.censored), k,
                            repr(float(price))))
    return path


def analyze(trace: Trace | Sequence[dict], out_dir: str | Path, only: Optional[Iterable[str]] = None,
            names: Optional[Sequence[str]] = None) -> list[RegularityReport]:
    """Run the checklist and write regularities.csv/.json, quarters.csv and impulse.csv (if shocked)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = run_checklist(trace, only, names)
    write_report(reports, out / "regularities.csv", "csv")
    write_report(reports, out / "regularities.json", "text")
    write_quarters(QuarterSeries.from_trace(trace), out / "quarters.csv")
    try:
        write_impulse(impulse_report(trace), out / "impulse.csv")
    except (ScenarioNotFound, InsufficientData):
        pass
    return reports


def _records(trace: Trace | Sequence[dict]) -> list[dict]:
    return list(trace.records) if isinstance(trace, Trace) else list(trace)
