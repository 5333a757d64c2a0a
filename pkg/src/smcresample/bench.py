"""Experiment harness: paired variance comparison, RMSE sweep, timings, median check.

Every report keeps its raw per-seed arrays; the aggregates are derived from
them on demand, so a serialised raw table is enough to recompute any summary.
Data for seed ``s`` comes from ``Rng(s).spawn(DATA_STREAM)`` and the filter
for seed ``s`` uses ``FilterConfig(seed=s)``, so schemes share observations
and propagation noise seed by seed.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import FilterConfig, run_filter
from .errors import InsufficientData, InvalidCount, UnsupportedModel
from .models import (
    LgssParams,
    SvParams,
    kalman_filter,
    lgss_model_spec,
    lgss_simulate,
    sv_model_spec,
    sv_simulate,
)
from .resampling import SCHEMES, get_resampler, normalize
from .rng import Rng

DATA_STREAM = 2
TIMING_STREAM = 3
MODELS = ("lgss", "sv")


def _model(name, params):
    if name == "lgss":
        params = params if params is not None else LgssParams()
        return params, lgss_model_spec(params)
    if name == "sv":
        params = params if params is not None else SvParams()
        return params, sv_model_spec(params)
    raise UnsupportedModel(f"unknown model {name!r}; choose from {', '.join(MODELS)}")


def simulate_data(name: str, params, T: int, seed: int):
    """Observations for ``seed`` (the states are discarded)."""
    if T < 1:
        raise InsufficientData("need at least one time step")
    rng = Rng(seed).spawn(DATA_STREAM)
    if name == "lgss":
        return lgss_simulate(params, T, rng)[1]
    return sv_simulate(params, T, rng)[1]


def _map(fn, tasks, jobs):
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _check_schemes(schemes):
    schemes = tuple(schemes)
    for s in schemes:
        get_resampler(s)
    return schemes


# ---------------------------------------------------------------------------
# weight-variance comparison


@dataclass
class VarianceReport:
    model: str
    schemes: tuple
    seeds: tuple
    n_particles: int
    weight_variance: np.ndarray  # (scheme, seed, t), pre-resampling
    ess: np.ndarray
    resampled: np.ndarray

    columns = ("scheme", "seed", "t", "weight_variance", "ess", "resampled")
    summary_columns = ("scheme", "mean_weight_variance", "stddev", "rdd_win_rate")

    def rows(self):
        K, S, T = self.weight_variance.shape
        for k in range(K):
            for s in range(S):
                for t in range(T):
                    yield (
                        self.schemes[k],
                        self.seeds[s],
                        t + 1,
                        self.weight_variance[k, s, t],
                        self.ess[k, s, t],
                        bool(self.resampled[k, s, t]),
                    )

    def per_seed_mean(self, scheme: str) -> np.ndarray:
        return self.weight_variance[self.schemes.index(scheme)].mean(axis=1)

    def mean_of_means(self) -> dict:
        return {s: float(self.per_seed_mean(s).mean()) for s in self.schemes}

    def stddev_of_means(self) -> dict:
        return {s: float(self.per_seed_mean(s).std(ddof=1)) if len(self.seeds) > 1 else 0.0
                for s in self.schemes}

    def win_rate(self, scheme: str = "rdd", other: str = "multinomial") -> float:
        """Fraction of seeds where ``scheme`` has the strictly smaller mean variance."""
        return float(np.mean(self.per_seed_mean(scheme) < self.per_seed_mean(other)))

    def lowest_fraction(self, scheme: str = "rdd") -> float:
        """Fraction of (seed, t) pairs where ``scheme`` is at or below every other scheme."""
        k = self.schemes.index(scheme)
        others = np.delete(self.weight_variance, k, axis=0)
        if others.shape[0] == 0:
            return 1.0
        return float(np.mean(self.weight_variance[k] <= others.min(axis=0)))

    def summary_rows(self):
        means, sds = self.mean_of_means(), self.stddev_of_means()
        has_rdd = "rdd" in self.schemes
        for s in self.schemes:
            rate = self.win_rate("rdd", s) if has_rdd and s != "rdd" else float("nan")
            yield (s, means[s], sds[s], rate)


def _variance_task(args):
    model, params, ys, T, n, schemes, seed, threshold, every = args
    params, spec = _model(model, params)
    if ys is None:
        ys = simulate_data(model, params, T, seed)
    wv, ess, rs = [], [], []
    for scheme in schemes:
        cfg = FilterConfig(n, scheme, threshold, seed, every)
        out = run_filter(spec, ys, cfg)
        wv.append(out.weight_variances)
        ess.append(out.ess)
        rs.append(out.resample_events)
    return np.array(wv), np.array(ess), np.array(rs)


def compare_resampler_variance(
    model: str = "lgss",
    params=None,
    *,
    schemes=SCHEMES,
    seeds=range(50),
    n_particles: int = 20,
    steps: int = 100,
    ys=None,
    ess_threshold: float = 0.5,
    resample_every_step: bool = False,
    jobs: int = 1,
) -> VarianceReport:
    """Paired filter runs per scheme; records pre-resampling weight variance.

    With ``ys=None`` each seed gets its own simulated data set; otherwise
    every seed filters the supplied observations.
    """
    schemes = _check_schemes(schemes)
    seeds = tuple(int(s) for s in seeds)
    params, _ = _model(model, params)
    if ys is not None:
        ys = np.asarray(ys, dtype=np.float64)
        if ys.shape[0] < 1:
            raise InsufficientData("need at least one observation")
    elif steps < 1:
        raise InsufficientData("need at least one time step")
    tasks = [
        (model, params, ys, steps, n_particles, schemes, s, ess_threshold, resample_every_step)
        for s in seeds
    ]
    results = _map(_variance_task, tasks, jobs)
    wv = np.stack([r[0] for r in results], axis=1)
    ess = np.stack([r[1] for r in results], axis=1)
    rs = np.stack([r[2] for r in results], axis=1)
    return VarianceReport(model, schemes, seeds, n_particles, wv, ess, rs)


# ---------------------------------------------------------------------------
# RMSE against the Kalman filter


@dataclass
class RmseReport:
    schemes: tuple
    particle_counts: tuple
    seeds: tuple
    rmse: np.ndarray  # (scheme, n, seed)
    correlation: np.ndarray

    columns = ("scheme", "n_particles", "seed", "rmse", "correlation")
    summary_columns = ("scheme", "n_particles", "median_rmse", "min_correlation")

    def rows(self):
        for k, scheme in enumerate(self.schemes):
            for p, n in enumerate(self.particle_counts):
                for s, seed in enumerate(self.seeds):
                    yield (scheme, n, seed, self.rmse[k, p, s], self.correlation[k, p, s])

    def median_rmse(self, scheme: str) -> np.ndarray:
        return np.median(self.rmse[self.schemes.index(scheme)], axis=1)

    def min_correlation(self, scheme: str) -> np.ndarray:
        return self.correlation[self.schemes.index(scheme)].min(axis=1)

    def summary_rows(self):
        for scheme in self.schemes:
            med, cor = self.median_rmse(scheme), self.min_correlation(scheme)
            for p, n in enumerate(self.particle_counts):
                yield (scheme, n, med[p], cor[p])


def _rmse_task(args):
    params, T, counts, schemes, seed, threshold, every = args
    ys = simulate_data("lgss", params, T, seed)
    kf = kalman_filter(params, ys).means
    spec = lgss_model_spec(params)
    rmse = np.empty((len(schemes), len(counts)))
    corr = np.empty_like(rmse)
    for k, scheme in enumerate(schemes):
        for p, n in enumerate(counts):
            out = run_filter(spec, ys, FilterConfig(n, scheme, threshold, seed, every))
            rmse[k, p] = np.sqrt(np.mean((out.means - kf) ** 2))
            corr[k, p] = np.corrcoef(out.means, kf)[0, 1] if T > 1 else float("nan")
    return rmse, corr


def rmse_sweep(
    model: str = "lgss",
    params=None,
    *,
    schemes=SCHEMES,
    particle_counts=(20, 100, 500),
    seeds=range(20),
    steps: int = 100,
    ess_threshold: float = 0.5,
    resample_every_step: bool = False,
    jobs: int = 1,
) -> RmseReport:
    """Filter-mean RMSE against the exact Kalman means, per scheme and particle count."""
    if model != "lgss":
        raise UnsupportedModel("the RMSE sweep needs the Kalman oracle, available for lgss only")
    if steps < 1:
        raise InsufficientData("need at least one time step")
    params = params if params is not None else LgssParams()
    schemes = _check_schemes(schemes)
    counts = tuple(int(n) for n in particle_counts)
    seeds = tuple(int(s) for s in seeds)
    tasks = [(params, steps, counts, schemes, s, ess_threshold, resample_every_step) for s in seeds]
    results = _map(_rmse_task, tasks, jobs)
    rmse = np.stack([r[0] for r in results], axis=2)
    corr = np.stack([r[1] for r in results], axis=2)
    return RmseReport(schemes, counts, seeds, rmse, corr)


# ---------------------------------------------------------------------------
# timing


@dataclass
class TimingReport:
    schemes: tuple
    particle_counts: tuple
    seconds: np.ndarray  # (scheme, n, replicate)

    columns = ("scheme", "n_particles", "mean_seconds_per_call", "stddev")
    raw_columns = ("scheme", "n_particles", "replicate", "seconds")

    def mean(self, scheme: str, n: int) -> float:
        return float(self.seconds[self.schemes.index(scheme), self.particle_counts.index(n)].mean())

    def stddev(self, scheme: str, n: int) -> float:
        return float(self.seconds[self.schemes.index(scheme), self.particle_counts.index(n)].std(ddof=1))

    def rows(self):
        for scheme in self.schemes:
            for n in self.particle_counts:
                yield (scheme, n, self.mean(scheme, n), self.stddev(scheme, n))

    def raw_rows(self):
        for k, scheme in enumerate(self.schemes):
            for p, n in enumerate(self.particle_counts):
                for r, sec in enumerate(self.seconds[k, p]):
                    yield (scheme, n, r, sec)


def time_resamplers(
    particle_counts=(5, 15, 50, 80, 100, 150),
    replicates: int = 1000,
    *,
    schemes=SCHEMES,
    seed: int = 0,
    warmup: int = 100,
) -> TimingReport:
    """Wall time per resampler call on Dirichlet(1) weight vectors.

    Each replicate draws one weight vector (untimed) and times every scheme
    on it, rotating the call order between replicates. Only the resampler
    call sits inside the timed region.
    """
    if replicates < 1000:
        raise InvalidCount("timing needs at least 1000 replicates")
    schemes = _check_schemes(schemes)
    counts = tuple(int(n) for n in particle_counts)
    fns = [get_resampler(s) for s in schemes]
    root = Rng(seed)
    weight_rng = root.spawn(TIMING_STREAM)
    call_rng = root.spawn(TIMING_STREAM + 1)
    K = len(schemes)
    seconds = np.empty((K, len(counts), replicates))
    clock = time.perf_counter
    for p, n in enumerate(counts):
        for _ in range(warmup):
            w = normalize(weight_rng.exponentials(n))
            for f in fns:
                f(w, n, call_rng)
        for r in range(replicates):
            w = normalize(weight_rng.exponentials(n))
            for j in range(K):
                k = (r + j) % K
                f = fns[k]
                t0 = clock()
                f(w, n, call_rng)
                seconds[k, p, r] = clock() - t0
    return TimingReport(schemes, counts, seconds)


# ---------------------------------------------------------------------------
# sample-median variance


def median_variance_analytic(r: int) -> float:
    """Variance ``1 / (8r + 12)`` of the median of ``2r + 1`` uniforms (a Beta(r+1, r+1))."""
    return 1.0 / (8 * r + 12)


def median_variance_check(r: int, replicates: int = 100_000, seed: int = 0):
    """Empirical variance of the median of ``2r + 1`` uniforms next to the analytic value."""
    if r < 1:
        raise InvalidCount("r must be a positive integer")
    if replicates < 100_000:
        raise InvalidCount("median check needs at least 100000 replicates")
    rng = Rng(seed)
    width = 2 * r + 1
    chunk = max(1, 4_000_000 // width)
    medians = np.empty(replicates)
    done = 0
    while done < replicates:
        m = min(chunk, replicates - done)
        u = rng.uniforms(m * width).reshape(m, width)
        medians[done:done + m] = np.median(u, axis=1)
        done += m
    return float(medians.var(ddof=1)), median_variance_analytic(r)
