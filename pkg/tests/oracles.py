"""Independent reference implementations used by the tests."""
import numpy as np


def tax_by_pennies(thresholds, rates, base):
    """Tax as the sum of the marginal rate applying to each cent of the base."""
    if base <= 0:
        return 0.0
    cents = np.arange(base)
    idx = np.searchsorted(np.asarray(thresholds), cents, side="right") - 1
    return float(np.asarray(rates)[idx].sum())


def gini_pairs(values):
    """Mean absolute difference over all ordered pairs, divided by twice the mean."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    return float(np.abs(x[:, None] - x[None, :]).sum() / (2 * n * n * x.mean()))


def random_schedule(rng, max_base):
    k = int(rng.integers(1, 6))
    inner = sorted(set(int(v) for v in rng.integers(1, max_base, size=k - 1)))
    thresholds = [0] + inner
    rates = [round(float(r), 4) for r in rng.uniform(0, 1, size=len(thresholds))]
    return thresholds, rates


def tax_table(thresholds, rates, upto):
    """``tax_by_pennies`` for every base 0..upto at once (entry b is the tax on b cents)."""
    cents = np.arange(upto)
    idx = np.searchsorted(np.asarray(thresholds), cents, side="right") - 1
    return np.concatenate(([0.0], np.cumsum(np.asarray(rates)[idx])))
