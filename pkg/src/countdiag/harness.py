"""Monte Carlo engine: seeded, chunked, worker-pool replication of index
estimates over scenario grids, asymptotic-curve emission, and CSV ingestion
of real series."""

from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import CountDiagError, CsvFormatError, DegenerateSeriesError, ParameterError
from .series import Bar1, CountSeries, MissingSpec, ModelSpec, PoiInar1
from .simulate import _markov_mask_from_uniforms
from .asymptotics import (
    IndexAsymptotics,
    KIND_BIN_DISPERSION,
    KIND_BIN_SKEWNESS,
    KIND_POI_DISPERSION,
    KIND_POI_SKEWNESS,
    bin_dispersion_asym_markov,
    poi_dispersion_asym_markov,
    skew_asym_binomial_markov,
    skew_asym_poisson_markov,
)

#: Replications are simulated in vectorized chunks of this many paths; each
#: chunk owns an independent random stream derived from (master seed,
#: scenario key, chunk index), so any scenario reproduces its grid row
#: exactly and results do not depend on the worker count.
DEFAULT_CHUNK = 2048

_POISSON_KINDS = (KIND_POI_DISPERSION, KIND_POI_SKEWNESS)
_BINOMIAL_KINDS = (KIND_BIN_DISPERSION, KIND_BIN_SKEWNESS)


@dataclass(frozen=True)
class Scenario:
    """One Monte Carlo cell: a model, a mask law, a length and a seed."""

    model: ModelSpec
    missing: MissingSpec
    T: int
    replications: int
    master_seed: int
    indices: Optional[tuple] = None

    def __post_init__(self):
        if self.T < 1:
            raise ParameterError(f"T must be >= 1, got {self.T}")
        if self.replications < 1:
            raise ParameterError(f"replications must be >= 1, got {self.replications}")
        allowed = _POISSON_KINDS if isinstance(self.model, PoiInar1) else _BINOMIAL_KINDS
        if self.indices is not None:
            bad = [k for k in self.indices if k not in allowed]
            if bad:
                raise ParameterError(f"index kinds {bad} not valid for this model family")

    @property
    def index_kinds(self) -> tuple:
        if self.indices is not None:
            return tuple(self.indices)
        return _POISSON_KINDS if isinstance(self.model, PoiInar1) else _BINOMIAL_KINDS

    def key(self) -> str:
        m = self.model
        if isinstance(m, PoiInar1):
            mstr = f"poi(mu={m.mu!r},rho={m.rho!r})"
        else:
            mstr = f"bar(n={m.n},pi={m.pi!r},rho={m.rho!r})"
        return (
            f"{mstr}|mask(tau={self.missing.tau!r},r={self.missing.r!r})"
            f"|T={self.T}|R={self.replications}"
        )


@dataclass(frozen=True)
class IndexStats:
    """Simulated versus asymptotic summary for one index in one scenario."""

    kind: str
    sim_mean: float
    sim_sd: float
    asym_mean: float
    asym_sd: float
    n_used: int
    n_failed: int


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    stats: dict
    error: Optional[str] = None


def _chunk_seed_sequence(master_seed: int, key: str, chunk_index: int):
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=16).digest()
    return np.random.SeedSequence(
        [int(master_seed), int.from_bytes(digest, "big"), int(chunk_index)]
    )


def _poisson_paths(mu: float, rho: float, T: int, count: int, rng) -> np.ndarray:
    x = rng.poisson(mu, size=count)
    out = np.empty((count, T), dtype=np.int64)
    out[:, 0] = x
    if T > 1:
        eps = rng.poisson(mu * (1.0 - rho), size=(count, T - 1))
        for t in range(1, T):
            x = rng.binomial(x, rho) + eps[:, t - 1]
            out[:, t] = x
    return out


def _binomial_paths(n: int, pi: float, rho: float, T: int, count: int, rng) -> np.ndarray:
    alpha = pi * (1.0 - rho) + rho
    beta = pi * (1.0 - rho)
    x = rng.binomial(n, pi, size=count)
    out = np.empty((count, T), dtype=np.int64)
    out[:, 0] = x
    for t in range(1, T):
        x = rng.binomial(x, alpha) + rng.binomial(n - x, beta)
        out[:, t] = x
    return out


def _index_estimates(values, mask, kinds, n=None) -> dict:
    """Vectorized index estimates per replication row; NaN marks a degenerate one."""
    o = mask.astype(np.float64)
    x = np.where(mask == 1, values, 0).astype(np.float64)
    n_obs = o.sum(axis=1)
    any_obs = n_obs > 0
    safe = np.where(any_obs, n_obs, 1.0)
    m1 = (o * x).sum(axis=1) / safe
    f2 = x * (x - 1.0)
    m2 = (o * f2).sum(axis=1) / safe
    m3 = (o * (f2 * (x - 2.0))).sum(axis=1) / safe

    out = {}
    with np.errstate(divide="ignore", invalid="ignore"):
        for kind in kinds:
            if kind == KIND_POI_DISPERSION:
                ok = any_obs & (m1 > 0)
                est = np.where(ok, m2 / np.where(ok, m1, 1.0) - m1 + 1.0, np.nan)
            elif kind == KIND_BIN_DISPERSION:
                ok = any_obs & (m1 > 0) & (m1 < n)
                den = np.where(ok, m1 * (1.0 - m1 / n), 1.0)
                est = np.where(ok, (m2 + m1 - m1**2) / den, np.nan)
            else:  # skewness, either family
                ok = any_obs & (m1 > 0) & (m2 > 0)
                den = np.where(ok, m2 * m1, 1.0)
                est = np.where(ok, m3 / den, np.nan)
            out[kind] = est
    return out


def _run_chunk(scenario: Scenario, chunk_index: int, size: int) -> dict:
    rng = np.random.default_rng(
        _chunk_seed_sequence(scenario.master_seed, scenario.key(), chunk_index)
    )
    m = scenario.model
    if isinstance(m, PoiInar1):
        values = _poisson_paths(m.mu, m.rho, scenario.T, size, rng)
        n = None
    else:
        values = _binomial_paths(m.n, m.pi, m.rho, scenario.T, size, rng)
        n = m.n
    if scenario.missing.tau >= 1.0:
        mask = np.ones_like(values, dtype=np.int8)
    else:
        u = rng.random((size, scenario.T))
        mask = _markov_mask_from_uniforms(u, scenario.missing.tau, scenario.missing.r)
    return _index_estimates(values, mask, scenario.index_kinds, n=n)


def _chunk_plan(replications: int, chunk_size: int):
    if chunk_size < 1:
        raise ParameterError(f"chunk size must be >= 1, got {chunk_size}")
    plan = []
    start = 0
    index = 0
    while start < replications:
        plan.append((index, min(chunk_size, replications - start)))
        start += chunk_size
        index += 1
    return plan


def scenario_asymptotics(scenario: Scenario, kind: str) -> IndexAsymptotics:
    """Closed-form asymptotics matching one scenario's true parameters."""
    m = scenario.model
    tau, r, T = scenario.missing.tau, scenario.missing.r, scenario.T
    if kind == KIND_POI_DISPERSION:
        return poi_dispersion_asym_markov(m.mu, m.rho, tau, r, T)
    if kind == KIND_POI_SKEWNESS:
        return skew_asym_poisson_markov(m.mu, m.rho, tau, r, T)
    if kind == KIND_BIN_DISPERSION:
        return bin_dispersion_asym_markov(m.n, m.pi, m.rho, tau, r, T)
    if kind == KIND_BIN_SKEWNESS:
        return skew_asym_binomial_markov(m.n, m.pi, m.rho, tau, r, T)
    raise ParameterError(f"unknown index kind {kind!r}")


def _aggregate(scenario: Scenario, chunk_results: Sequence[dict]) -> ScenarioResult:
    stats = {}
    all_failed = True
    for kind in scenario.index_kinds:
        est = np.concatenate([c[kind] for c in chunk_results])
        finite = est[np.isfinite(est)]
        n_used = int(finite.size)
        n_failed = int(est.size - n_used)
        sim_mean = float(finite.mean()) if n_used >= 1 else math.nan
        sim_sd = float(finite.std(ddof=1)) if n_used >= 2 else math.nan
        asym = scenario_asymptotics(scenario, kind)
        stats[kind] = IndexStats(
            kind=kind,
            sim_mean=sim_mean,
            sim_sd=sim_sd,
            asym_mean=asym.mean,
            asym_sd=asym.sd,
            n_used=n_used,
            n_failed=n_failed,
        )
        if n_used > 0:
            all_failed = False
    if all_failed:
        raise DegenerateSeriesError(
            f"all {scenario.replications} replications degenerate for {scenario.key()}"
        )
    return ScenarioResult(scenario=scenario, stats=stats)


def run_scenario(
    scenario: Scenario,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
    _executor: Optional[ProcessPoolExecutor] = None,
) -> ScenarioResult:
    """Run one scenario: simulate, mask, estimate, aggregate.

    Output is deterministic for a fixed (master seed, chunk size) no matter
    how many workers execute the chunks.
    """
    plan = _chunk_plan(scenario.replications, chunk_size)
    if _executor is not None:
        futures = [_executor.submit(_run_chunk, scenario, i, size) for i, size in plan]
        chunk_results = [f.result() for f in futures]
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(_run_chunk, scenario, i, size) for i, size in plan]
            chunk_results = [f.result() for f in futures]
    else:
        chunk_results = [_run_chunk(scenario, i, size) for i, size in plan]
    return _aggregate(scenario, chunk_results)


@dataclass(frozen=True)
class GridConfig:
    """Axes of a scenario grid; defaults mirror the standard study design."""

    family: str
    mu: float = 3.0
    rho: float = 0.5
    ns: tuple = (10, 25)
    taus: tuple = (1.0, 0.8, 0.6, 0.4)
    rs: tuple = (0.0, 0.3, 0.6)
    lengths: tuple = (100, 250, 500, 1000)
    replications: int = 10_000
    master_seed: int = 1

    def __post_init__(self):
        if self.family not in ("poisson", "binomial"):
            raise ParameterError(f"unknown family {self.family!r}")
        if self.family == "binomial":
            for n in self.ns:
                if n < 2:
                    raise ParameterError(f"n must be >= 2, got {n}")
                if not 0.0 < self.mu / n < 1.0:
                    raise ParameterError(f"mu={self.mu} incompatible with n={n}")

    def scenarios(self) -> list:
        """Grid cells in stable row order: tau desc, r asc, T asc, n asc."""
        cells = []
        ns = self.ns if self.family == "binomial" else (None,)
        for tau in self.taus:
            for r in self.rs:
                for T in self.lengths:
                    for n in ns:
                        cells.append((-tau, r, T, n if n is not None else 0, tau))
        cells.sort()
        out = []
        for _, r, T, n, tau in cells:
            if self.family == "poisson":
                model = PoiInar1(self.mu, self.rho)
            else:
                model = Bar1(n, self.mu / n, self.rho)
            out.append(
                Scenario(
                    model=model,
                    missing=MissingSpec(tau, r),
                    T=T,
                    replications=self.replications,
                    master_seed=self.master_seed,
                )
            )
        return out


_GRID_JSON_KEYS = {
    "family": "family",
    "mu": "mu",
    "rho": "rho",
    "n": "ns",
    "tau": "taus",
    "r": "rs",
    "T": "lengths",
    "replications": "replications",
    "master_seed": "master_seed",
}


def grid_config_from_dict(doc: dict) -> GridConfig:
    """Build a GridConfig from a JSON document; unknown keys are rejected."""
    unknown = sorted(set(doc) - set(_GRID_JSON_KEYS))
    if unknown:
        raise ParameterError(f"unknown config keys: {', '.join(unknown)}")
    if "family" not in doc:
        raise ParameterError("config requires a 'family' key")
    kwargs = {}
    for json_key, attr in _GRID_JSON_KEYS.items():
        if json_key not in doc:
            continue
        value = doc[json_key]
        if attr in ("ns", "taus", "rs", "lengths"):
            value = tuple(value) if isinstance(value, (list, tuple)) else (value,)
        kwargs[attr] = value
    if doc.get("family") == "poisson" and "n" in doc:
        raise ParameterError("'n' is only valid for the binomial family")
    return GridConfig(**kwargs)


def run_grid(
    config: GridConfig, workers: int = 1, chunk_size: int = DEFAULT_CHUNK
) -> list:
    """Run every scenario of a grid; per-scenario errors are recorded in the
    row and the grid continues."""
    scenarios = config.scenarios()
    results = []
    executor = None
    try:
        if workers > 1:
            executor = ProcessPoolExecutor(max_workers=workers)
        for s in scenarios:
            try:
                results.append(
                    run_scenario(s, workers=workers, chunk_size=chunk_size, _executor=executor)
                )
            except CountDiagError as err:
                results.append(ScenarioResult(scenario=s, stats={}, error=str(err)))
    finally:
        if executor is not None:
            executor.shutdown()
    return results


_ROW_PREFIX = {"dispersion": "disp", "skewness": "skew"}


def result_rows(results: Sequence[ScenarioResult]) -> list:
    """Flatten scenario results to one dict per scenario."""
    rows = []
    for res in results:
        s = res.scenario
        m = s.model
        row = {
            "family": "poisson" if isinstance(m, PoiInar1) else "binomial",
            "n": m.n if isinstance(m, Bar1) else "",
            "mu": m.mu if isinstance(m, PoiInar1) else m.mean,
            "rho": m.rho,
            "tau": s.missing.tau,
            "r": s.missing.r,
            "T": s.T,
            "replications": s.replications,
        }
        for kind, stat in res.stats.items():
            prefix = _ROW_PREFIX[kind.split("-", 1)[1]]
            row[f"{prefix}_sim_mean"] = stat.sim_mean
            row[f"{prefix}_sim_sd"] = stat.sim_sd
            row[f"{prefix}_asym_mean"] = stat.asym_mean
            row[f"{prefix}_asym_sd"] = stat.asym_sd
            row[f"{prefix}_failures"] = stat.n_failed
        row["error"] = res.error or ""
        rows.append(row)
    return rows


_GRID_COLUMNS = [
    "family", "n", "mu", "rho", "tau", "r", "T", "replications",
    "disp_sim_mean", "disp_sim_sd", "disp_asym_mean", "disp_asym_sd", "disp_failures",
    "skew_sim_mean", "skew_sim_sd", "skew_asym_mean", "skew_asym_sd", "skew_failures",
    "error",
]


def write_grid_csv(results: Sequence[ScenarioResult], path) -> None:
    """Write grid results at full precision, one scenario per row."""
    rows = result_rows(results)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=_GRID_COLUMNS, restval="")
        writer.writeheader()
        writer.writerows(rows)


def format_grid_table(results: Sequence[ScenarioResult]) -> str:
    """Render grid results as a plain-text table with 3-decimal entries."""
    rows = result_rows(results)
    head = ["tau", "r", "T", "n", "disp sim", "disp asym", "sd sim", "sd asym",
            "skew sim", "skew asym", "sd sim", "sd asym", "fail"]
    lines = ["  ".join(f"{h:>9}" for h in head)]
    for row in rows:
        fails = max(
            int(row.get("disp_failures") or 0), int(row.get("skew_failures") or 0)
        )
        cells = [
            f"{row['tau']:.2f}", f"{row['r']:.2f}", str(row["T"]), str(row["n"]),
        ] + [
            "" if row.get(c) is None or row.get(c) == "" else f"{row[c]:.3f}"
            for c in (
                "disp_sim_mean", "disp_asym_mean", "disp_sim_sd", "disp_asym_sd",
                "skew_sim_mean", "skew_asym_mean", "skew_sim_sd", "skew_asym_sd",
            )
        ] + [str(fails)]
        lines.append("  ".join(f"{c:>9}" for c in cells))
    return "\n".join(lines)


def emit_curves(
    kind: str,
    rho: float = 0.5,
    r_values: Sequence[float] = (0.0, 0.3, 0.6),
    taus: Optional[Sequence[float]] = None,
    mu: float = 3.0,
    n: Optional[int] = None,
) -> list:
    """Tabulate T-fold asymptotic variance and bias over a tau range.

    Returns one dict per (r, tau) pair with columns tau, r, mu, n,
    t_variance and t_bias, ready for external plotting.  The tau range must
    stay within [0.25, 1]: more than 75 percent missing data is not a
    practically meaningful regime.
    """
    if taus is None:
        taus = np.linspace(0.25, 1.0, 76)
    taus = np.asarray(taus, dtype=np.float64)
    if taus.size == 0 or taus.min() < 0.25 or taus.max() > 1.0:
        raise ParameterError("tau range must lie within [0.25, 1]")
    if kind in (KIND_BIN_DISPERSION, KIND_BIN_SKEWNESS):
        if n is None or n < 2:
            raise ParameterError(f"{kind} curves require an upper bound n >= 2")
        pi = mu / n
    elif kind not in (KIND_POI_DISPERSION, KIND_POI_SKEWNESS):
        raise ParameterError(f"unknown index kind {kind!r}")
    rows = []
    for r in r_values:
        for tau in taus:
            if kind == KIND_POI_DISPERSION:
                asym = poi_dispersion_asym_markov(mu, rho, float(tau), float(r), 1)
            elif kind == KIND_POI_SKEWNESS:
                asym = skew_asym_poisson_markov(mu, rho, float(tau), float(r), 1)
            elif kind == KIND_BIN_DISPERSION:
                asym = bin_dispersion_asym_markov(n, pi, rho, float(tau), float(r), 1)
            else:
                asym = skew_asym_binomial_markov(n, pi, rho, float(tau), float(r), 1)
            rows.append(
                {
                    "index": kind,
                    "tau": float(tau),
                    "r": float(r),
                    "mu": mu,
                    "n": "" if n is None else n,
                    "t_variance": asym.variance,
                    "t_bias": asym.bias,
                }
            )
    return rows


def write_curves_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(
            f, fieldnames=["index", "tau", "r", "mu", "n", "t_variance", "t_bias"]
        )
        writer.writeheader()
        writer.writerows(rows)


def _parse_count_field(field: str, row_number: int) -> int:
    try:
        value = int(field)
    except ValueError:
        try:
            as_float = float(field)
        except ValueError:
            raise CsvFormatError(
                f"row {row_number}: {field!r} is not a count"
            ) from None
        if not as_float.is_integer():
            raise CsvFormatError(
                f"row {row_number}: {field!r} is not an integer"
            ) from None
        value = int(as_float)
    if value < 0:
        raise CsvFormatError(f"row {row_number}: negative count {value}")
    return value


def load_series_csv(path, na_values: Sequence[str] = ("NA",)) -> CountSeries:
    """Read a count series from a one-observation-per-row CSV file.

    The last column holds the counts (an optional leading index column is
    ignored), an optional header row is skipped, and a literal NA token or an
    empty field marks a missing observation.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise CsvFormatError(f"{path}: empty file")
    na_set = {token.strip() for token in na_values}

    def value_field(line: str) -> str:
        return line.split(",")[-1].strip()

    start = 0
    first = value_field(lines[0])
    if first != "" and first not in na_set:
        try:
            float(first)
        except ValueError:
            start = 1  # header row
    values, mask = [], []
    for i, line in enumerate(lines[start:], start=start + 1):
        field = value_field(line)
        if field == "" or field in na_set:
            values.append(0)
            mask.append(0)
        else:
            values.append(_parse_count_field(field, i))
            mask.append(1)
    if not values:
        raise CsvFormatError(f"{path}: no data rows")
    return CountSeries(np.asarray(values), np.asarray(mask))


def write_series_csv(series: CountSeries, path, na_token: str = "NA") -> None:
    """Write a count series one observation per row, NA for masked positions."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write("x\n")
        for value, observed in zip(series.values, series.mask):
            f.write(f"{int(value)}\n" if observed else f"{na_token}\n")
