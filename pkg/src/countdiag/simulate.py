"""Exact stationary simulators for the count processes and the observation mask."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .series import Bar1, CountSeries, MissingSpec, PoiInar1, Seed, MASK_SENTINEL


def binomial_thinning(x: int, p: float, rng: np.random.Generator) -> int:
    """Draw the binomial thinning p ∘ x, i.e. a Bin(x, p) variate.

    Sampling is exact (numpy's inversion/BTPE binomial sampler), which matters
    for the small-count regimes this package targets.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"thinning probability must lie in [0, 1], got {p}")
    if x < 0:
        raise ParameterError(f"count must be non-negative, got {x}")
    return int(rng.binomial(int(x), p))


def simulate_poi_inar1(spec: PoiInar1, T: int, seed: Seed) -> CountSeries:
    """Simulate a Poisson INAR(1) path of length T, fully observed.

    The initial value is drawn from the stationary Poi(mu) marginal, so no
    burn-in is needed; each step applies binomial thinning to the previous
    count and adds a Poisson innovation.
    """
    if T < 1:
        raise ParameterError(f"series length must be >= 1, got {T}")
    rng = seed.generator()
    x = np.empty(T, dtype=np.int64)
    prev = int(rng.poisson(spec.mu))
    x[0] = prev
    if T > 1:
        eps = rng.poisson(spec.innovation_mean, size=T - 1)
        rho = spec.rho
        for t in range(1, T):
            prev = int(rng.binomial(prev, rho)) + int(eps[t - 1])
            x[t] = prev
    return CountSeries.fully_observed(x)


def simulate_bar1(spec: Bar1, T: int, seed: Seed) -> CountSeries:
    """Simulate a binomial AR(1) path of length T, fully observed.

    Starts from the stationary Bin(n, pi) marginal; each step uses two
    independent thinnings, one of the previous count with probability alpha
    and one of the head room n - X with probability beta.
    """
    if T < 1:
        raise ParameterError(f"series length must be >= 1, got {T}")
    rng = seed.generator()
    n, alpha, beta = spec.n, spec.alpha, spec.beta
    x = np.empty(T, dtype=np.int64)
    prev = int(rng.binomial(n, spec.pi))
    x[0] = prev
    for t in range(1, T):
        prev = int(rng.binomial(prev, alpha)) + int(rng.binomial(n - prev, beta))
        x[t] = prev
    return CountSeries.fully_observed(x)


def _markov_mask_from_uniforms(u: np.ndarray, tau: float, r: float) -> np.ndarray:
    """Build stationary Markov mask paths from uniforms along the last axis.

    Uses a latch construction: one uniform per step either forces the state
    (below P(1|0) -> 1, at or above P(1|1) -> 0) or copies the previous state,
    which lets the whole chain be filled in vectorized form.  Requires r >= 0
    so that P(1|0) <= tau <= P(1|1).
    """
    p_gain = tau * (1.0 - r)  # P(O_t = 1 | O_{t-1} = 0)
    p_stay = tau + (1.0 - tau) * r  # P(O_t = 1 | O_{t-1} = 1)
    T = u.shape[-1]
    state = np.full(u.shape, -1, dtype=np.int8)
    state[u < p_gain] = 1
    state[u >= p_stay] = 0
    state[..., 0] = (u[..., 0] < tau).astype(np.int8)
    idx = np.where(state >= 0, np.arange(T), 0)
    np.maximum.accumulate(idx, axis=-1, out=idx)
    return np.take_along_axis(state, idx, axis=-1)


def simulate_markov_mask(spec: MissingSpec, T: int, seed: Seed) -> np.ndarray:
    """Simulate a stationary binary Markov mask with mean tau and ACF r**h.

    The transition probabilities implied by E[O_t O_{t+h}] = tau**2 +
    tau*(1-tau)*r**h are P(1|1) = tau + (1-tau)*r and P(1|0) = tau*(1-r);
    the initial state is Bernoulli(tau).  ``r = 0`` yields an i.i.d. mask.
    """
    if T < 1:
        raise ParameterError(f"mask length must be >= 1, got {T}")
    rng = seed.generator()
    u = rng.random(T)
    return _markov_mask_from_uniforms(u, spec.tau, spec.r)


def apply_mask(series: CountSeries, mask) -> CountSeries:
    """Attach an observation mask to a series, hiding the masked values.

    Values at mask-0 positions are replaced by the sentinel; downstream
    estimators only ever touch mask-1 positions.  A fully masked result is
    accepted here and rejected by the estimators that cannot handle it.
    """
    mask = np.asarray(mask)
    if mask.shape != series.values.shape:
        raise ParameterError(
            f"mask length {mask.size} does not match series length {series.T}"
        )
    values = np.where(mask == 1, series.values, MASK_SENTINEL)
    return CountSeries(values, mask)
