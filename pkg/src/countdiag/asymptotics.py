"""Asymptotic variance and bias of the dispersion and skewness indices under
amplitude-modulated (missing-data) sampling.

Two independent routes are provided for every quantity: general series
formulas driven by a moment oracle and an arbitrary mask law, and closed
forms for the Poisson/binomial AR(1) families under a Markov mask.  The two
routes are kept separate so they can cross-check each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Callable

import numpy as np

from .errors import ConvergenceError, NumericalDegeneracyError, ParameterError

KIND_POI_DISPERSION = "poisson-dispersion"
KIND_BIN_DISPERSION = "binomial-dispersion"
KIND_POI_SKEWNESS = "poisson-skewness"
KIND_BIN_SKEWNESS = "binomial-skewness"

#: Observation probabilities below this are rejected as numerically meaningless.
MIN_TAU = 0.01

_DEFAULT_RTOL = 1e-12
_DEFAULT_LAG_CAP = 10**6


@dataclass(frozen=True)
class IndexAsymptotics:
    """Null value, asymptotic variance and bias of one index at sample size T.

    ``variance`` and ``bias`` include the 1/T factor exactly once, so the
    two-sided critical values at level alpha are
    ``null_value + bias +- z_{1-alpha/2} * sqrt(variance)``.
    """

    kind: str
    null_value: float
    variance: float
    bias: float
    T: int

    @property
    def sd(self) -> float:
        return sqrt(self.variance)

    @property
    def mean(self) -> float:
        """First-order approximation to E[index]: null_value + bias."""
        return self.null_value + self.bias


class SequenceMaskLaw:
    """Mask law given by tau and user-supplied lagged products tau(h), h = 1..L.

    Beyond the supplied lags the mask is treated as uncorrelated, i.e.
    tau(h) = tau**2 for h > L.
    """

    def __init__(self, tau: float, lagged_products):
        if not 0.0 < tau <= 1.0:
            raise ParameterError(f"tau must lie in (0, 1], got {tau}")
        vals = np.asarray(lagged_products, dtype=np.float64)
        if vals.ndim != 1:
            raise ParameterError("lagged products must be a one-dimensional sequence")
        if np.any(vals < 0.0) or np.any(vals > 1.0):
            raise ParameterError("lagged products must lie in [0, 1]")
        self.tau = float(tau)
        self._vals = vals

    def lagged_product(self, h: int) -> float:
        h = abs(h)
        if h == 0:
            return self.tau
        if h <= self._vals.size:
            return float(self._vals[h - 1])
        return self.tau**2

    def mask_autocovariance(self, h: int) -> float:
        return self.lagged_product(h) - self.tau**2


def _check_mask_params(tau: float, r: float) -> None:
    if not 0.0 < tau <= 1.0:
        raise ParameterError(f"tau must lie in (0, 1], got {tau}")
    if tau < MIN_TAU:
        raise ParameterError(f"tau below {MIN_TAU} is numerically meaningless")
    if not 0.0 <= r < 1.0:
        raise ParameterError(f"r must lie in [0, 1), got {r}")


def kappa(s: int, tau: float, r: float, rho: float) -> float:
    """Variance kernel combining missingness (tau, r) and dependence rho.

    kappa(s) = (1/tau) (1 + r rho**s) / (1 - r rho**s)
             + 2 (1-r) rho**s / ((1 - r rho**s)(1 - rho**s)).

    At tau = 1 it collapses to (1 + rho**s)/(1 - rho**s) for any r, and at
    rho = 0 to 1/tau.
    """
    if not (isinstance(s, (int, np.integer)) and s >= 1):
        raise ParameterError(f"s must be a positive integer, got {s}")
    _check_mask_params(tau, r)
    if not 0.0 <= rho < 1.0:
        raise ParameterError(f"rho must lie in [0, 1), got {rho}")
    x = rho**s
    if 1.0 - r * x <= 0.0 or 1.0 - x <= 0.0:
        raise NumericalDegeneracyError("variance kernel pole at r*rho**s = 1 or rho = 1")
    return (1.0 / tau) * (1.0 + r * x) / (1.0 - r * x) + 2.0 * (1.0 - r) * x / (
        (1.0 - r * x) * (1.0 - x)
    )


def _sum_lagged(
    term: Callable[[int], float],
    rtol: float,
    lag_cap: int,
    consecutive: int = 4,
) -> float:
    """Sum term(h) over h = 1, 2, ... until the terms are negligible.

    Stops once `consecutive` successive terms fall below rtol relative to the
    running scale; raises if the cap is hit first.
    """
    total = 0.0
    scale = 1e-300
    small = 0
    for h in range(1, lag_cap + 1):
        t = term(h)
        total += t
        scale = max(scale, abs(t), abs(total))
        if abs(t) <= rtol * scale:
            small += 1
            if small >= consecutive:
                return total
        else:
            small = 0
    raise ConvergenceError(
        f"lagged series did not converge within {lag_cap} lags (rtol={rtol})"
    )


@dataclass
class CovarianceRequest:
    """One entry of the limiting covariance of the factorial-moment estimates.

    Attributes
    ----------
    i, j : int
        Moment orders, both >= 1.
    moments : object
        Oracle with ``univariate(k)`` and ``mixed(k, s, h)``.
    mask_law : object
        Law with ``tau`` and ``lagged_product(h)`` (e.g. MissingSpec or
        SequenceMaskLaw).
    rtol : float
        Truncation tolerance for the lag series.
    lag_cap : int
        Maximum number of lags before a convergence error is raised.
    """

    i: int
    j: int
    moments: object
    mask_law: object
    rtol: float = _DEFAULT_RTOL
    lag_cap: int = _DEFAULT_LAG_CAP


def clt_sigma_general(req: CovarianceRequest) -> float:
    """sigma_ij of the limiting normal law of the factorial-moment estimates.

    Evaluates (1/tau)(mu_(i,j)(0) - mu_(i) mu_(j)) + (1/tau**2) *
    sum_{h>=1} tau(h) (mu_(j,i)(h) + mu_(i,j)(h) - 2 mu_(i) mu_(j)) by direct
    summation of the lag series.
    """
    if req.i < 1 or req.j < 1:
        raise ParameterError("orders i, j must be >= 1")
    mom, law = req.moments, req.mask_law
    tau = law.tau
    mi = mom.univariate(req.i)
    mj = mom.univariate(req.j)
    lag0 = mom.mixed(req.i, req.j, 0) - mi * mj

    def term(h: int) -> float:
        return law.lagged_product(h) * (
            mom.mixed(req.j, req.i, h) + mom.mixed(req.i, req.j, h) - 2.0 * mi * mj
        )

    return lag0 / tau + _sum_lagged(term, req.rtol, req.lag_cap) / tau**2


def sigma_star(
    i: int,
    j: int,
    moments,
    mask_law,
    rtol: float = _DEFAULT_RTOL,
    lag_cap: int = _DEFAULT_LAG_CAP,
) -> float:
    """Covariance entry of the un-normalized modulated averages.

    Three cases: the pure mask entry (i = j = 0) equals tau(1-tau) +
    2 sum_h gamma_O(h); a mixed entry (i = 0 < j) equals the mask entry times
    mu_(j); and for i, j > 0 the count and mask contributions combine through
    the lagged products tau(h).
    """
    if i < 0 or j < 0:
        raise ParameterError("orders must be non-negative")
    if i > j:
        i, j = j, i
    law = mask_law
    tau = law.tau
    s00 = tau * (1.0 - tau) + 2.0 * _sum_lagged(
        lambda h: law.mask_autocovariance(h), rtol, lag_cap
    )
    if j == 0:
        return s00
    if i == 0:
        return s00 * moments.univariate(j)
    mi = moments.univariate(i)
    mj = moments.univariate(j)

    def term(h: int) -> float:
        return law.lagged_product(h) * (
            moments.mixed(j, i, h) + moments.mixed(i, j, h) - 2.0 * mi * mj
        )

    return (
        tau * (moments.mixed(i, j, 0) - mi * mj)
        + s00 * mi * mj
        + _sum_lagged(term, rtol, lag_cap)
    )


def sigma_poisson_markov(
    i: int, j: int, mu: float, rho: float, tau: float, r: float
) -> float:
    """Closed-form sigma_ij for the Poisson AR family under a Markov mask."""
    if i > j:
        i, j = j, i
    k1 = kappa(1, tau, r, rho)
    s11 = mu * k1
    if (i, j) == (1, 1):
        return s11
    if (i, j) == (1, 2):
        return 2.0 * mu * s11
    if (i, j) == (1, 3):
        return 3.0 * mu**2 * s11
    s22 = 4.0 * mu**2 * s11 + 2.0 * mu**2 * kappa(2, tau, r, rho)
    if (i, j) == (2, 2):
        return s22
    if (i, j) == (2, 3):
        return 3.0 * mu * s22 - 6.0 * mu**3 * s11
    if (i, j) == (3, 3):
        return (
            9.0 * mu**2 * s22
            - 27.0 * mu**4 * s11
            + 6.0 * mu**3 * kappa(3, tau, r, rho)
        )
    raise ParameterError(f"unsupported order pair ({i}, {j}); only i <= j <= 3")


def sigma_binomial_markov(
    i: int, j: int, n: int, pi: float, rho: float, tau: float, r: float
) -> float:
    """Closed-form sigma_ij for the binomial AR family under a Markov mask."""
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    if not 0.0 < pi < 1.0:
        raise ParameterError(f"pi must lie in (0, 1), got {pi}")
    if i > j:
        i, j = j, i
    q = 1.0 - pi
    s11 = n * pi * q * kappa(1, tau, r, rho)
    if (i, j) == (1, 1):
        return s11
    if (i, j) == (1, 2):
        return 2.0 * (n - 1) * pi * s11
    if (i, j) == (1, 3):
        return 3.0 * (n - 1) * (n - 2) * pi**2 * s11
    n2 = n * (n - 1)
    s22 = 4.0 * (n - 1) ** 2 * pi**2 * s11 + 2.0 * n2 * q**2 * pi**2 * kappa(
        2, tau, r, rho
    )
    if (i, j) == (2, 2):
        return s22
    if (i, j) == (2, 3):
        return 3.0 * (n - 2) * pi * s22 - 6.0 * (n - 1) ** 2 * (n - 2) * pi**3 * s11
    if (i, j) == (3, 3):
        n3 = n * (n - 1) * (n - 2)
        return (
            9.0 * (n - 2) ** 2 * pi**2 * s22
            - 27.0 * (n - 1) ** 2 * (n - 2) ** 2 * pi**4 * s11
            + 6.0 * n3 * q**3 * pi**3 * kappa(3, tau, r, rho)
        )
    raise ParameterError(f"unsupported order pair ({i}, {j}); only i <= j <= 3")


def _check_T(T: int) -> None:
    if not (isinstance(T, (int, np.integer)) and T >= 1):
        raise ParameterError(f"sample size T must be a positive integer, got {T}")


def poi_dispersion_asym_general(
    moments,
    mask_law,
    T: int,
    rtol: float = _DEFAULT_RTOL,
    lag_cap: int = _DEFAULT_LAG_CAP,
) -> IndexAsymptotics:
    """Asymptotics of the dispersion index for any count family, via series.

    Driven entirely by the moment oracle (orders up to four and joint moments
    up to (2, 2)) and the mask law; no Markov structure is assumed.
    """
    _check_T(T)
    tau = mask_law.tau
    mu = moments.univariate(1)
    if mu <= 0:
        raise ParameterError("mean must be positive")
    m2, m3, m4 = (moments.univariate(k) for k in (2, 3, 4))
    a = m2 / mu + mu

    lag0_var = (
        a**2 * (m2 + mu)
        - 2.0 * a * (m3 + 2.0 * m2)
        + m4
        + 4.0 * m3
        + 2.0 * m2
        - mu**4
    )

    def var_term(h: int) -> float:
        return mask_law.lagged_product(h) * (
            a**2 * moments.mixed(1, 1, h)
            - a * (moments.mixed(2, 1, h) + moments.mixed(1, 2, h))
            + moments.mixed(2, 2, h)
            - mu**4
        )

    variance = (
        lag0_var + 2.0 / tau * _sum_lagged(var_term, rtol, lag_cap)
    ) / (T * tau * mu**2)

    lag0_bias = m2**2 - mu * (m2 + m3)

    def bias_term(h: int) -> float:
        return mask_law.lagged_product(h) * (
            m2 * moments.mixed(1, 1, h)
            - mu / 2.0 * (moments.mixed(2, 1, h) + moments.mixed(1, 2, h))
        )

    bias = (
        lag0_bias + 2.0 / tau * _sum_lagged(bias_term, rtol, lag_cap)
    ) / (T * tau * mu**3)
    return IndexAsymptotics(KIND_POI_DISPERSION, 1.0, variance, bias, T)


def poi_dispersion_asym_markov(
    mu: float, rho: float, tau: float, r: float, T: int
) -> IndexAsymptotics:
    """Closed-form dispersion asymptotics for the Poisson AR family.

    variance = (2/T) kappa(2), bias = -(1/T) kappa(1).
    """
    _check_T(T)
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    variance = 2.0 / T * kappa(2, tau, r, rho)
    bias = -1.0 / T * kappa(1, tau, r, rho)
    return IndexAsymptotics(KIND_POI_DISPERSION, 1.0, variance, bias, T)


def bin_dispersion_asym_general(
    n: int,
    moments,
    mask_law,
    T: int,
    rtol: float = _DEFAULT_RTOL,
    lag_cap: int = _DEFAULT_LAG_CAP,
) -> IndexAsymptotics:
    """Asymptotics of the bounded-count dispersion index, via series."""
    _check_T(T)
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    tau = mask_law.tau
    mu = moments.univariate(1)
    if not 0.0 < mu < n:
        raise ParameterError(f"mean must lie strictly between 0 and n, got {mu}")
    m2, m3, m4 = (moments.univariate(k) for k in (2, 3, 4))
    p = mu**2 * (1.0 - n) - n * m2 + 2.0 * mu * m2
    q = mu**3 * (1.0 - n) + n**2 * m2 + 3.0 * mu * m2 * (mu - n)
    w = mu * (n - mu)

    lag0_var = (
        p**2 * (m2 + mu - mu**2)
        + 2.0 * w * p * (m3 + 2.0 * m2 - mu * m2)
        + w**2 * (m4 + 4.0 * m3 + 2.0 * m2 - m2**2)
    )

    def var_term(h: int) -> float:
        return mask_law.lagged_product(h) * (
            p**2 * (moments.mixed(1, 1, h) - mu**2)
            + w * p * (moments.mixed(2, 1, h) + moments.mixed(1, 2, h) - 2.0 * mu * m2)
            + w**2 * (moments.mixed(2, 2, h) - m2**2)
        )

    variance = (
        n**2
        * (lag0_var + 2.0 / tau * _sum_lagged(var_term, rtol, lag_cap))
        / (T * tau * mu**4 * (n - mu) ** 4)
    )

    lag0_bias = q * (m2 + mu - mu**2) + w * (2.0 * mu - n) * (m3 + 2.0 * m2 - mu * m2)

    def bias_term(h: int) -> float:
        return mask_law.lagged_product(h) * (
            2.0 * q * (moments.mixed(1, 1, h) - mu**2)
            + w
            * (2.0 * mu - n)
            * (moments.mixed(2, 1, h) + moments.mixed(1, 2, h) - 2.0 * mu * m2)
        )

    bias = (
        n
        * (lag0_bias + 1.0 / tau * _sum_lagged(bias_term, rtol, lag_cap))
        / (T * tau * mu**3 * (n - mu) ** 3)
    )
    return IndexAsymptotics(KIND_BIN_DISPERSION, 1.0, variance, bias, T)


def bin_dispersion_asym_markov(
    n: int, pi: float, rho: float, tau: float, r: float, T: int
) -> IndexAsymptotics:
    """Closed-form bounded-count dispersion asymptotics: the Poisson closed
    form compressed by the factor (1 - 1/n).  Does not depend on pi."""
    _check_T(T)
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    if not 0.0 < pi < 1.0:
        raise ParameterError(f"pi must lie in (0, 1), got {pi}")
    shrink = 1.0 - 1.0 / n
    variance = 2.0 / T * shrink * kappa(2, tau, r, rho)
    bias = -1.0 / T * shrink * kappa(1, tau, r, rho)
    return IndexAsymptotics(KIND_BIN_DISPERSION, 1.0, variance, bias, T)


def skew_asym_general(
    moments,
    mask_law,
    T: int,
    rtol: float = _DEFAULT_RTOL,
    lag_cap: int = _DEFAULT_LAG_CAP,
    kind: str = "skewness",
) -> IndexAsymptotics:
    """Asymptotics of the skewness index for any count family, via series.

    Delta-method combination of the sigma_ij for i, j <= 3 with the Jacobian
    d = (1/(mu_(2) mu)) (-mu_(3)/mu, -mu_(3)/mu_(2), 1) and the matching
    Hessian (whose (3,3) entry vanishes).  The null value is the population
    index mu_(3) / (mu_(2) mu) implied by the supplied moments: 1 for a
    Poisson marginal, 1 - 2/n for a binomial one.
    """
    _check_T(T)
    mu = moments.univariate(1)
    m2 = moments.univariate(2)
    m3 = moments.univariate(3)
    if mu <= 0 or m2 <= 0:
        raise ParameterError("degenerate moments: need mu > 0 and mu_(2) > 0")
    c = 1.0 / (m2 * mu)
    d1, d2, d3 = -m3 / mu * c, -m3 / m2 * c, c
    h11 = 2.0 * m3 / mu**2 * c
    h22 = 2.0 * m3 / m2**2 * c
    h12 = m3 / (mu * m2) * c
    h13 = -c / mu
    h23 = -c / m2

    sig = {}
    for i in (1, 2, 3):
        for j in range(i, 4):
            sig[(i, j)] = clt_sigma_general(
                CovarianceRequest(i, j, moments, mask_law, rtol, lag_cap)
            )

    variance = (
        d1**2 * sig[(1, 1)]
        + d2**2 * sig[(2, 2)]
        + d3**2 * sig[(3, 3)]
        + 2.0 * d1 * d2 * sig[(1, 2)]
        + 2.0 * d1 * d3 * sig[(1, 3)]
        + 2.0 * d2 * d3 * sig[(2, 3)]
    ) / T
    bias = (
        0.5 * (h11 * sig[(1, 1)] + h22 * sig[(2, 2)])
        + h12 * sig[(1, 2)]
        + h13 * sig[(1, 3)]
        + h23 * sig[(2, 3)]
    ) / T
    return IndexAsymptotics(kind, m3 * c, variance, bias, T)


def skew_asym_poisson_markov(
    mu: float, rho: float, tau: float, r: float, T: int
) -> IndexAsymptotics:
    """Closed-form skewness asymptotics for the Poisson AR family.

    variance = (1/(T mu**3)) [8 mu kappa(2) + 6 kappa(3)],
    bias = -(2/(T mu**2)) [mu kappa(1) + 2 kappa(2)]; null value 1.
    """
    _check_T(T)
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    k1, k2, k3 = (kappa(s, tau, r, rho) for s in (1, 2, 3))
    variance = (8.0 * mu * k2 + 6.0 * k3) / (T * mu**3)
    bias = -2.0 / (T * mu**2) * (mu * k1 + 2.0 * k2)
    return IndexAsymptotics(KIND_POI_SKEWNESS, 1.0, variance, bias, T)


def skew_asym_binomial_markov(
    n: int, pi: float, rho: float, tau: float, r: float, T: int
) -> IndexAsymptotics:
    """Closed-form skewness asymptotics for the binomial AR family.

    Null value 1 - 2/n; converges to the Poisson closed form as n grows with
    the mean mu = n*pi held fixed.
    """
    _check_T(T)
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    if not 0.0 < pi < 1.0:
        raise ParameterError(f"pi must lie in (0, 1), got {pi}")
    mu = n * pi
    k1, k2, k3 = (kappa(s, tau, r, rho) for s in (1, 2, 3))
    variance = (
        (n - 2)
        * (n - mu) ** 3
        / ((n - 1) * n**3)
        / (T * mu**3)
        * ((n - 2) / (n - mu) * 8.0 * mu * k2 + 6.0 * k3)
    )
    bias = (
        -(n - 2)
        * (n - mu) ** 2
        / ((n - 1) * n**2)
        * 2.0
        / (T * mu**2)
        * ((n - 1) / (n - mu) * mu * k1 + 2.0 * k2)
    )
    return IndexAsymptotics(KIND_BIN_SKEWNESS, 1.0 - 2.0 / n, variance, bias, T)


def raw_poi_dispersion_asym(
    raw_moments,
    mask_law,
    T: int,
    rtol: float = _DEFAULT_RTOL,
    lag_cap: int = _DEFAULT_LAG_CAP,
) -> IndexAsymptotics:
    """Dispersion asymptotics computed entirely from raw moments.

    Independent oracle for the factorial-moment route: the oracle must expose
    raw moments ``univariate(k) = E[X**k]`` and ``mixed(k, l, h) =
    E[X_t**k X_{t-h}**l]``.  Agrees with the factorial route exactly.
    """
    _check_T(T)
    tau = mask_law.tau
    mu = raw_moments.univariate(1)
    if mu <= 0:
        raise ParameterError("mean must be positive")
    m2, m3, m4 = (raw_moments.univariate(k) for k in (2, 3, 4))
    b = m2 / mu**2 + 1.0

    lag0_var = (
        b**2 * (m2 - mu**2)
        - 2.0 / mu * b * (m3 - mu * m2)
        + (m4 - m2**2) / mu**2
    )

    def var_term(h: int) -> float:
        return mask_law.lagged_product(h) * (
            b**2 * (raw_moments.mixed(1, 1, h) - mu**2)
            + (raw_moments.mixed(2, 2, h) - m2**2) / mu**2
            - b
            / mu
            * (raw_moments.mixed(2, 1, h) + raw_moments.mixed(1, 2, h) - 2.0 * mu * m2)
        )

    variance = (lag0_var + 2.0 / tau * _sum_lagged(var_term, rtol, lag_cap)) / (T * tau)

    lag0_bias = m2**2 - m3 * mu

    def bias_term(h: int) -> float:
        return mask_law.lagged_product(h) * (
            m2 * raw_moments.mixed(1, 1, h)
            - mu / 2.0 * (raw_moments.mixed(2, 1, h) + raw_moments.mixed(1, 2, h))
        )

    bias = (
        lag0_bias + 2.0 / tau * _sum_lagged(bias_term, rtol, lag_cap)
    ) / (T * tau * mu**3)
    return IndexAsymptotics(KIND_POI_DISPERSION, 1.0, variance, bias, T)
