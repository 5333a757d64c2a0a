"""Bootstrap particle filter with a pluggable resampler."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import StepDiagnostics, ess_estimate, unique_ancestors, weight_variance
from .errors import InsufficientData, InvalidParams, WeightCollapse
from .models import ModelSpec
from .resampling import SCHEMES, get_resampler
from .rng import Rng

PROPAGATION_STREAM = 0
RESAMPLING_STREAM = 1


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int = 20
    resampler: str = "rdd"
    ess_threshold_fraction: float = 0.5
    seed: int = 0
    resample_every_step: bool = False

    def __post_init__(self):
        if self.n_particles < 2:
            raise InvalidParams("n_particles must be at least 2")
        if self.resampler not in SCHEMES:
            raise InvalidParams(f"unknown resampler {self.resampler!r}")
        if not 0.0 < self.ess_threshold_fraction <= 1.0:
            raise InvalidParams("ess_threshold_fraction must lie in (0, 1]")


@dataclass
class ParticleState:
    t: int
    particles: np.ndarray
    logweights: np.ndarray
    normalized: np.ndarray


@dataclass
class FilterOutput:
    means: np.ndarray
    diagnostics: list = field(default_factory=list)
    resample_events: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    @property
    def ess(self) -> np.ndarray:
        return np.array([d.ess for d in self.diagnostics])

    @property
    def weight_variances(self) -> np.ndarray:
        return np.array([d.weight_variance for d in self.diagnostics])

    def __len__(self) -> int:
        return len(self.diagnostics)


def log_normalize(logw) -> np.ndarray:
    """Normalised weights from log-weights, shifting by the max first."""
    logw = np.asarray(logw, dtype=np.float64)
    top = logw.max()
    if not np.isfinite(top):
        raise WeightCollapse("no particle has finite log-weight")
    w = np.exp(logw - top)
    return w / w.sum()


def weight_update(prev_logw, obs_loglik) -> np.ndarray:
    """Incremental log-weight update under the bootstrap proposal.

    With the transition density as proposal the transition terms cancel and
    the new log-weight is the old one plus the observation log-likelihood.
    """
    prev_logw = np.asarray(prev_logw, dtype=np.float64)
    obs_loglik = np.asarray(obs_loglik, dtype=np.float64)
    if prev_logw.shape != obs_loglik.shape:
        raise ValueError("log-weight and log-likelihood arrays differ in shape")
    out = prev_logw + obs_loglik
    if np.any(np.isnan(out)) or np.any(out == np.inf):
        raise WeightCollapse("log-weights contain NaN or +inf")
    if not np.any(np.isfinite(out)):
        raise WeightCollapse("every particle has zero likelihood")
    return out


def initial_state(model: ModelSpec, cfg: FilterConfig, rng: Rng) -> ParticleState:
    n = cfg.n_particles
    return ParticleState(
        t=0,
        particles=np.asarray(model.initial(rng, n), dtype=np.float64),
        logweights=np.zeros(n),
        normalized=np.full(n, 1.0 / n),
    )


def bpf_step(
    state: ParticleState,
    y: float,
    model: ModelSpec,
    cfg: FilterConfig,
    prop_rng: Rng,
    resample_rng: Rng,
):
    """Propagate, reweight and (maybe) resample; returns ``(state, diagnostics)``.

    Diagnostics describe the weights before resampling. After a resample the
    log-weights are reset so every particle carries ``1/N``.
    """
    n = state.particles.shape[0]
    t = state.t + 1
    x = model.transition(prop_rng, state.particles)
    try:
        logw = weight_update(state.logweights, model.loglik(y, x))
    except WeightCollapse as exc:
        raise WeightCollapse(f"step {t}: {exc}", step=t) from None
    logw = logw - logw.max()
    w = log_normalize(logw)

    ess = ess_estimate(w)
    mean = float(np.dot(w, x))
    var = weight_variance(w)
    fire = cfg.resample_every_step or ess < cfg.ess_threshold_fraction * n

    if fire:
        tags = get_resampler(cfg.resampler)(w, n, resample_rng)
        x = x[tags]
        logw = np.zeros(n)
        w = np.full(n, 1.0 / n)
        uniq = unique_ancestors(tags)
    else:
        uniq = n

    diag = StepDiagnostics(t, ess, var, uniq, bool(fire), mean)
    return ParticleState(t, x, logw, w), diag


def filter_streams(seed: int) -> tuple[Rng, Rng]:
    """Independent propagation and resampling generators derived from ``seed``."""
    root = Rng(seed)
    return root.spawn(PROPAGATION_STREAM), root.spawn(RESAMPLING_STREAM)


def run_filter(model: ModelSpec, ys, cfg: FilterConfig) -> FilterOutput:
    ys = np.asarray(ys, dtype=np.float64)
    if ys.ndim != 1 or ys.shape[0] < 1:
        raise InsufficientData("need at least one observation")
    prop_rng, res_rng = filter_streams(cfg.seed)
    state = initial_state(model, cfg, prop_rng)
    diags = []
    for y in ys:
        state, d = bpf_step(state, float(y), model, cfg, prop_rng, res_rng)
        diags.append(d)
    return FilterOutput(
        means=np.array([d.mean_estimate for d in diags]),
        diagnostics=diags,
        resample_events=np.array([d.resampled for d in diags], dtype=bool),
    )
