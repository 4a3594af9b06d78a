"""Synthetic demonstration data.

No market data ships with the package; a deterministic five-year daily
price fixture is generated instead from a parameter set typical of fitted
equity-index log returns (strong positive correlation, tiny drifts).  The
end-to-end tests and the README examples run against this fixture.
"""

from __future__ import annotations

import csv
import datetime as _dt

import numpy as np

from .model import WvagParams
from .simulate import ReturnSample, RngStream, wvag_increment

#: equity-index-like daily-return parameters (c = 1 day)
DEMO_PARAMS = WvagParams(
    a=0.899,
    alpha=[0.898, 0.878],
    mu=[-0.562e-3, -1.166e-3],
    sigma=[[0.928e-4, 0.844e-4], [0.844e-4, 1.051e-4]],
    m=[0.982e-3, 1.066e-3],
)

DEMO_SEED = 20160212
DEMO_N_PRICES = 1260
DEMO_START = _dt.date(2011, 2, 14)


def demo_returns(n: int = DEMO_N_PRICES - 1, seed: int = DEMO_SEED) -> ReturnSample:
    rng = RngStream(seed).generator()
    obs = wvag_increment(DEMO_PARAMS, 1.0, rng, size=n)
    return ReturnSample(c=1.0, observations=obs)


def _business_days(start: _dt.date, count: int):
    days = []
    d = start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d)
        d += _dt.timedelta(days=1)
    return days


def write_demo_prices(path, n_prices: int = DEMO_N_PRICES, seed: int = DEMO_SEED,
                      s0=(100.0, 100.0)):
    """Write the demo price CSV (date,price1,price2) and return its path."""
    sample = demo_returns(n_prices - 1, seed=seed)
    logp = np.concatenate([[np.zeros(2)], np.cumsum(sample.observations, axis=0)])
    prices = np.asarray(s0) * np.exp(logp)
    dates = _business_days(DEMO_START, n_prices)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "price1", "price2"])
        for d, row in zip(dates, prices):
            w.writerow([d.isoformat(), repr(float(row[0])), repr(float(row[1]))])
    return path
