"""Scalar state-space models and the exact Kalman filter for the linear case.

Linear Gaussian (LGSS)::

    X_0 ~ N(m0, P0)          (stationary N(0, sv^2 / (1 - phi^2)) by default)
    X_t | X_{t-1} ~ N(phi X_{t-1}, sv^2)
    Y_t | X_t     ~ N(X_t, se^2)

Stochastic volatility (SV)::

    X_0 ~ N(mu, sv^2 / (1 - rho^2))
    X_t | X_{t-1} ~ N(mu + rho (X_{t-1} - mu), sv^2)
    Y_t | X_t     ~ N(0, exp(X_t) tau)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParams
from .rng import Rng

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LgssParams:
    phi: float = 0.75
    sigma_v: float = 1.0
    sigma_e: float = 0.1
    init_mean: float = 0.0
    init_var: Optional[float] = None  # None: stationary variance

    def __post_init__(self):
        if not -1.0 < self.phi < 1.0:
            raise InvalidParams(f"phi must lie in (-1, 1), got {self.phi}")
        if not self.sigma_v > 0.0:
            raise InvalidParams("sigma_v must be positive")
        if not self.sigma_e > 0.0:
            raise InvalidParams("sigma_e must be positive")
        if self.init_var is not None and not self.init_var >= 0.0:
            raise InvalidParams("init_var must be non-negative")

    @property
    def prior_var(self) -> float:
        if self.init_var is not None:
            return float(self.init_var)
        return self.sigma_v**2 / (1.0 - self.phi**2)


@dataclass(frozen=True)
class SvParams:
    mu: float = 0.0
    rho: float = 0.95
    sigma_v: float = 0.2
    tau: float = 1.0

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidParams(f"rho must lie in [-1, 1], got {self.rho}")
        if not self.sigma_v > 0.0:
            raise InvalidParams("sigma_v must be positive")
        if not self.tau > 0.0:
            raise InvalidParams("tau must be positive")


def gamma_prior_mean(shape: float, b: float, convention: str = "rate") -> float:
    """Mean of a Gamma(shape, b) prior under either parameterisation.

    Gamma(2, 10) gives 0.2 as shape/rate and 20 as shape/scale; the SV
    default ``sigma_v=0.2`` uses the former.
    """
    if convention == "rate":
        return shape / b
    if convention == "scale":
        return shape * b
    raise ValueError("convention must be 'rate' or 'scale'")


@dataclass(frozen=True)
class ModelSpec:
    """Bootstrap-filter view of a model.

    ``initial(rng, n)`` draws ``n`` initial states, ``transition(rng, x)``
    propagates an array of states, ``loglik(y, x)`` evaluates the observation
    log-density for every state in ``x``.
    """

    name: str
    initial: Callable[[Rng, int], np.ndarray]
    transition: Callable[[Rng, np.ndarray], np.ndarray]
    loglik: Callable[[float, np.ndarray], np.ndarray]
    params: object = field(default=None, compare=False)


def gaussian_logpdf(y, mean, var):
    return -0.5 * (LOG_2PI + np.log(var) + (y - mean) ** 2 / var)


def lgss_model_spec(params: LgssParams) -> ModelSpec:
    phi, sv, se = params.phi, params.sigma_v, params.sigma_e
    m0, sd0 = params.init_mean, math.sqrt(params.prior_var)
    se2 = se * se
    if se2 == 0.0:
        raise InvalidParams("sigma_e underflows to a zero observation variance")

    def initial(rng, n):
        return m0 + sd0 * rng.normals(n)

    def transition(rng, x):
        return phi * x + sv * rng.normals(x.shape[0])

    def loglik(y, x):
        return -0.5 * (LOG_2PI + math.log(se2) + (y - x) ** 2 / se2)

    return ModelSpec("lgss", initial, transition, loglik, params)


def sv_model_spec(params: SvParams) -> ModelSpec:
    if abs(params.rho) >= 1.0:
        raise InvalidParams("stationary initial variance needs |rho| < 1")
    mu, rho, sv, tau = params.mu, params.rho, params.sigma_v, params.tau
    sd0 = sv / math.sqrt(1.0 - rho * rho)
    log_tau = math.log(tau)

    def initial(rng, n):
        return mu + sd0 * rng.normals(n)

    def transition(rng, x):
        return mu + rho * (x - mu) + sv * rng.normals(x.shape[0])

    def loglik(y, x):
        # variance exp(x) * tau, written to avoid overflow for large |x|
        return -0.5 * (LOG_2PI + x + log_tau + y * y * np.exp(-x) / tau)

    return ModelSpec("sv", initial, transition, loglik, params)


def lgss_simulate(params: LgssParams, T: int, rng: Rng):
    """Simulate ``(states, observations)`` for ``t = 1..T``."""
    if T < 1:
        raise ValueError("T must be at least 1")
    x_prev = params.init_mean + math.sqrt(params.prior_var) * rng.normals(1)[0]
    v = rng.normals(T)
    e = rng.normals(T)
    xs = np.empty(T)
    for t in range(T):
        x_prev = params.phi * x_prev + params.sigma_v * v[t]
        xs[t] = x_prev
    return xs, xs + params.sigma_e * e


def sv_simulate(params: SvParams, T: int, rng: Rng):
    """Simulate log-volatilities and log-returns for ``t = 1..T``."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if abs(params.rho) >= 1.0:
        raise InvalidParams("stationary initial variance needs |rho| < 1")
    sd0 = params.sigma_v / math.sqrt(1.0 - params.rho**2)
    x_prev = params.mu + sd0 * rng.normals(1)[0]
    v = rng.normals(T)
    e = rng.normals(T)
    xs = np.empty(T)
    for t in range(T):
        x_prev = params.mu + params.rho * (x_prev - params.mu) + params.sigma_v * v[t]
        xs[t] = x_prev
    return xs, np.exp(0.5 * xs) * math.sqrt(params.tau) * e


@dataclass
class KalmanOutput:
    means: np.ndarray
    variances: np.ndarray
    pred_means: np.ndarray
    pred_variances: np.ndarray
    loglik: float


def kalman_filter(params: LgssParams, ys) -> KalmanOutput:
    """Filtering means and variances of ``X_t | y_{1:t}`` for the scalar LGSS."""
    ys = np.asarray(ys, dtype=np.float64)
    T = ys.shape[0]
    means = np.empty(T)
    variances = np.empty(T)
    pm = np.empty(T)
    pv = np.empty(T)
    m, P = params.init_mean, params.prior_var
    r = params.sigma_e**2
    q = params.sigma_v**2
    ll = 0.0
    for t in range(T):
        m_pred = params.phi * m
        P_pred = params.phi**2 * P + q
        s = P_pred + r
        gain = P_pred / s
        innov = ys[t] - m_pred
        m = m_pred + gain * innov
        P = P_pred - gain * P_pred
        ll += -0.5 * (LOG_2PI + math.log(s) + innov * innov / s)
        pm[t], pv[t], means[t], variances[t] = m_pred, P_pred, m, P
    return KalmanOutput(means, variances, pm, pv, ll)
