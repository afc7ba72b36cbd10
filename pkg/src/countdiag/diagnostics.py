"""Index estimators, null-model parameter fitting under missingness, and the
marginal dispersion/skewness hypothesis tests."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, asdict
from typing import Optional

from scipy.stats import norm

from .errors import DegenerateSeriesError, ParameterError
from .series import CountSeries
from .moments import sample_factorial_moments
from .missingness import dr_acf, estimate_r, estimate_tau
from .asymptotics import (
    IndexAsymptotics,
    bin_dispersion_asym_markov,
    poi_dispersion_asym_markov,
    skew_asym_binomial_markov,
    skew_asym_poisson_markov,
)

FAMILY_POISSON = "poisson"
FAMILY_BINOMIAL = "binomial"

INDEX_DISPERSION = "dispersion"
INDEX_SKEWNESS = "skewness"

_RHO_MAX = 1.0 - 1e-9


@dataclass(frozen=True)
class NullSpec:
    """Null hypothesis for a marginal test.

    Parameters
    ----------
    family : {"poisson", "binomial"}
        Marginal family of the hypothesized AR(1)-type null model.
    n : int, optional
        Structural upper bound of the counts; required for the binomial
        family and never estimated from data.
    alpha : float
        Test level.
    ignore_missing : bool
        If true, masked positions are dropped entirely before testing: the
        series is compacted, tau is set to 1, and the dependence parameter is
        re-estimated on the shortened series.  This deliberately reproduces
        the naive analysis that pretends there are no gaps.
    """

    family: str
    n: Optional[int] = None
    alpha: float = 0.05
    ignore_missing: bool = False

    def __post_init__(self):
        if self.family not in (FAMILY_POISSON, FAMILY_BINOMIAL):
            raise ParameterError(f"unknown family {self.family!r}")
        if self.family == FAMILY_BINOMIAL:
            if self.n is None or int(self.n) < 2:
                raise ParameterError("binomial null requires an upper bound n >= 2")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class FittedParams:
    """Plug-in parameter estimates used to evaluate the asymptotics."""

    mu: float
    rho: float
    tau: float
    r: float
    T: int
    n: Optional[int] = None


@dataclass(frozen=True)
class TestReport:
    """Outcome of one marginal index test.

    ``lower_critical`` and ``upper_critical`` are ``null_value + bias -+
    z_{1-alpha/2} * sd``; the interval is symmetric around null + bias.  For
    one-sided use the ``sided`` flag restricts which bound drives the
    decision (the bounds themselves are unchanged).
    """

    kind: str
    statistic: float
    null_value: float
    bias: float
    sd: float
    lower_critical: float
    upper_critical: float
    decision: str
    fitted: FittedParams
    alpha: float
    sided: str = "two"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["fitted"] = asdict(self.fitted)
        return out


def index_poi_dispersion(series: CountSeries) -> float:
    """Sample dispersion index for unbounded counts: muhat_(2)/muhat - muhat + 1."""
    ms = sample_factorial_moments(series, 2)
    mu = ms.muhat[0]
    if mu <= 0:
        raise DegenerateSeriesError("all observed counts are zero")
    return float(ms.muhat[1] / mu - mu + 1.0)


def index_bin_dispersion(series: CountSeries, n: int) -> float:
    """Sample dispersion index for counts bounded by n.

    (muhat_(2) + muhat - muhat**2) / (muhat (1 - muhat/n)); equals one in
    expectation under a Bin(n, pi) marginal.
    """
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    ms = sample_factorial_moments(series, 2)
    mu = ms.muhat[0]
    if not 0.0 < mu < n:
        raise DegenerateSeriesError(
            f"observed mean {mu} must lie strictly between 0 and n={n}"
        )
    return float((ms.muhat[1] + mu - mu**2) / (mu * (1.0 - mu / n)))


def index_skew(series: CountSeries) -> float:
    """Sample skewness index muhat_(3) / (muhat_(2) muhat)."""
    ms = sample_factorial_moments(series, 3)
    mu, m2, m3 = ms.muhat
    if mu <= 0:
        raise DegenerateSeriesError("all observed counts are zero")
    if m2 <= 0:
        raise DegenerateSeriesError("all observed counts are <= 1; skewness undefined")
    return float(m3 / (m2 * mu))


def fit_null_params(series: CountSeries, n: Optional[int] = None) -> FittedParams:
    """Estimate (mu, rho, tau, r) from a partially observed series.

    mu comes from the amplitude-modulated mean, tau and r from the mask
    (r = 0 by convention for a constant mask), and rho from the lag-1
    missing-data autocorrelation.  rho and r are clamped into [0, 1) with a
    warning when outside, since the closed-form asymptotics assume
    non-negative dependence.
    """
    ms = sample_factorial_moments(series, 1)
    mu = float(ms.muhat[0])
    tau = estimate_tau(series.mask)
    try:
        r = estimate_r(series.mask)
    except DegenerateSeriesError:
        r = 0.0
    r = _clamp_dependence(r, "r")
    rho = float(dr_acf(series, 1).rho_hat[1])
    rho = _clamp_dependence(rho, "rho")
    return FittedParams(mu=mu, rho=rho, tau=tau, r=r, T=series.T, n=n)


def _clamp_dependence(value: float, name: str) -> float:
    if value < 0.0:
        warnings.warn(
            f"estimated {name} = {value:.4f} < 0; clamped to 0 (closed forms "
            f"assume non-negative dependence)",
            stacklevel=3,
        )
        return 0.0
    if value >= 1.0:
        warnings.warn(
            f"estimated {name} = {value:.4f} >= 1; clamped below 1", stacklevel=3
        )
        return _RHO_MAX
    return value


def _asymptotics_for(
    kind: str, family: str, mu: float, rho: float, tau: float, r: float, T: int,
    n: Optional[int],
) -> IndexAsymptotics:
    if kind == INDEX_DISPERSION:
        if family == FAMILY_POISSON:
            return poi_dispersion_asym_markov(mu, rho, tau, r, T)
        return bin_dispersion_asym_markov(int(n), mu / n, rho, tau, r, T)
    if kind == INDEX_SKEWNESS:
        if family == FAMILY_POISSON:
            return skew_asym_poisson_markov(mu, rho, tau, r, T)
        return skew_asym_binomial_markov(int(n), mu / n, rho, tau, r, T)
    raise ParameterError(f"unknown index kind {kind!r}")


def test_from_params(
    kind: str,
    family: str,
    mu: float,
    rho: float,
    tau: float,
    r: float,
    T: int,
    n: Optional[int] = None,
    alpha: float = 0.05,
    statistic: float = math.nan,
    sided: str = "two",
) -> TestReport:
    """Build a test report from explicit parameter estimates.

    The critical values are null + bias -+ z_{1-alpha/2} * sd, with bias and
    sd taken from the Markov closed-form asymptotics evaluated at the given
    plug-in parameters.  ``statistic`` may be NaN if only the critical values
    are of interest (the decision is then "retain").
    """
    if sided not in ("two", "upper", "lower"):
        raise ParameterError(f"sided must be 'two', 'upper' or 'lower', got {sided!r}")
    if family == FAMILY_BINOMIAL and (n is None or int(n) < 2):
        raise ParameterError("binomial family requires an upper bound n >= 2")
    asym = _asymptotics_for(kind, family, mu, rho, tau, r, T, n)
    z = norm.ppf(1.0 - alpha / 2.0)
    center = asym.null_value + asym.bias
    lower = center - z * asym.sd
    upper = center + z * asym.sd
    if math.isnan(statistic):
        reject = False
    elif sided == "two":
        reject = statistic < lower or statistic > upper
    elif sided == "upper":
        reject = statistic > upper
    else:
        reject = statistic < lower
    fitted = FittedParams(mu=mu, rho=rho, tau=tau, r=r, T=T, n=n)
    return TestReport(
        kind=f"{family}-{kind}",
        statistic=statistic,
        null_value=asym.null_value,
        bias=asym.bias,
        sd=asym.sd,
        lower_critical=lower,
        upper_critical=upper,
        decision="reject" if reject else "retain",
        fitted=fitted,
        alpha=alpha,
        sided=sided,
    )


def test_index(
    series: CountSeries, null: NullSpec, kind: str, sided: str = "two"
) -> TestReport:
    """Run one marginal index test against a Poisson or binomial AR(1) null.

    Fits the plug-in parameters from the series (respecting the mask), then
    compares the sample index against critical values from the matching
    closed-form asymptotics.  With ``null.ignore_missing`` the masked
    positions are dropped first and the dependence parameter is re-estimated
    on the compacted series.
    """
    if kind not in (INDEX_DISPERSION, INDEX_SKEWNESS):
        raise ParameterError(f"unknown index kind {kind!r}")
    work = series.compact() if null.ignore_missing else series
    fitted = fit_null_params(work, n=null.n)
    if kind == INDEX_DISPERSION:
        statistic = (
            index_poi_dispersion(work)
            if null.family == FAMILY_POISSON
            else index_bin_dispersion(work, int(null.n))
        )
    else:
        statistic = index_skew(work)
    return test_from_params(
        kind,
        null.family,
        mu=fitted.mu,
        rho=fitted.rho,
        tau=fitted.tau,
        r=fitted.r,
        T=fitted.T,
        n=null.n,
        alpha=null.alpha,
        statistic=statistic,
        sided=sided,
    )
