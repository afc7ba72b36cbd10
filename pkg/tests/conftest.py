"""Shared fixtures and independent numeric oracles for the test suite."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import binom, poisson

DATA_DIR = Path(__file__).parent / "data"

GRID_TAUS = (1.0, 0.8, 0.6, 0.4)
GRID_RS = (0.0, 0.3, 0.6)
GRID_LENGTHS = (100, 250, 500, 1000)


def load_reference_grid(name):
    """Load one benchmark grid CSV as a list of per-row dicts."""
    rows = []
    with open(DATA_DIR / name, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            rows.append(
                {
                    "tau": float(row["tau"]),
                    "r": float(row["r"]),
                    "T": int(row["T"]),
                    "disp_mean_sim": float(row["disp_mean_sim"]),
                    "disp_mean_asym": float(row["disp_mean_asym"]),
                    "disp_sd_sim": float(row["disp_sd_sim"]),
                    "disp_sd_asym": float(row["disp_sd_asym"]),
                    "skew_mean_sim": float(row["skew_mean_sim"]),
                    "skew_mean_asym": float(row["skew_mean_asym"]),
                    "skew_sd_sim": float(row["skew_sd_sim"]),
                    "skew_sd_asym": float(row["skew_sd_asym"]),
                }
            )
    return rows


@pytest.fixture(scope="session")
def reference_grids():
    return {
        "poisson": load_reference_grid("reference_grid_poisson.csv"),
        "binomial10": load_reference_grid("reference_grid_binomial_n10.csv"),
        "binomial25": load_reference_grid("reference_grid_binomial_n25.csv"),
    }


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def poisson_support(mu, tail=1e-15):
    """Support points of Poi(mu) with tail mass below `tail` truncated."""
    hi = int(poisson.isf(tail, mu)) + 2
    x = np.arange(0, hi + 1)
    return x, poisson.pmf(x, mu)


def binomial_support(n, pi):
    x = np.arange(0, n + 1)
    return x, binom.pmf(x, n, pi)


def brute_force_moment(func, support):
    """E[func(X)] by direct summation over a truncated pmf."""
    x, p = support
    return float((func(x.astype(np.float64)) * p).sum())


def falling_array(x, k):
    out = np.ones_like(x, dtype=np.float64)
    for i in range(k):
        out = out * (x - i)
    return out


def bartlett_ar1_se(rho, h, T):
    """Large-sample SE of the lag-h sample autocorrelation of an AR(1)."""
    num = (1 - rho ** (2 * h)) * (1 + rho**2) / (1 - rho**2) - 2 * h * rho ** (2 * h)
    return np.sqrt(num / T)


def batch_se(values, n_batches=100):
    """Batch-means standard error of the mean of a dependent sequence."""
    values = np.asarray(values, dtype=np.float64)
    usable = (values.size // n_batches) * n_batches
    batches = values[:usable].reshape(n_batches, -1).mean(axis=1)
    return float(batches.std(ddof=1) / np.sqrt(n_batches))


def poisson_lag_closed_form(mu, rho, h, k, s):
    """Per-pair polynomial closed forms for the Poisson joint factorial moments."""
    R = rho**h
    table = {
        (1, 1): mu**2 + mu * R,
        (1, 2): mu**3 + 2 * mu**2 * R,
        (2, 2): mu**4 + 4 * mu**3 * R + 2 * mu**2 * R**2,
        (1, 3): mu**4 + 3 * mu**3 * R,
        (2, 3): mu**5 + 6 * mu**4 * R + 6 * mu**3 * R**2,
        (3, 3): mu**6 + 9 * mu**5 * R + 18 * mu**4 * R**2 + 6 * mu**3 * R**3,
    }
    return table[(min(k, s), max(k, s))]


def binomial_lag_closed_form(n, pi, rho, h, k, s):
    """Per-pair polynomial closed forms for the binomial joint factorial moments."""
    R = rho**h
    q = 1 - pi
    n2 = n * (n - 1)
    n3 = n * (n - 1) * (n - 2)
    table = {
        (1, 1): n**2 * pi**2 + n * pi * q * R,
        (1, 2): n * n2 * pi**3 + 2 * n2 * pi**2 * q * R,
        (2, 2): n2**2 * pi**4 + 4 * (n - 1) * n2 * q * pi**3 * R
        + 2 * n2 * q**2 * pi**2 * R**2,
        (1, 3): n * n3 * pi**4 + 3 * n3 * q * pi**3 * R,
        (2, 3): n2 * n3 * pi**5 + 6 * n3 * (n - 1) * q * pi**4 * R
        + 6 * n3 * q**2 * pi**3 * R**2,
        (3, 3): n3**2 * pi**6 + 9 * (n - 1) * (n - 2) * n3 * q * pi**5 * R
        + 18 * (n - 2) * n3 * q**2 * pi**4 * R**2 + 6 * n3 * q**3 * pi**3 * R**3,
    }
    return table[(min(k, s), max(k, s))]
