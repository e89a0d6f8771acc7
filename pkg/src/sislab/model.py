"""SIS model parameters, SDE coefficients, state transforms and thresholds.

The infected count follows

    dI = (eta*I - (beta/K)*I**2) dt + sigma*(K - I)*I dW,   eta = beta - b - gamma,

on the open interval (0, K); the susceptible count is recovered as S = K - I.
Two changes of variables are used by the schemes:

* odds   z = I/(K - I),        dz = z*phi(z) dt + sigma*K*z dW
* logit  v = ln(I/(K - I)),    dv = F(v) dt + sigma*K dW

All functions accept scalars or numpy arrays and return numpy values.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

__all__ = [
    "BoundOverflowWarning",
    "DerivedParams",
    "DomainError",
    "ExtinctionCheck",
    "ParameterError",
    "SISParams",
    "CLAMP_EPS",
    "F_hat",
    "F_logit",
    "G",
    "clamp_to_domain",
    "diffusion_B",
    "drift_A",
    "extinction_conditions",
    "exact_moment_envelopes",
    "inverse_logit",
    "inverse_odds",
    "load_params",
    "logistic_solution",
    "log_moment_bound_exact",
    "log_moment_bound_scheme",
    "moment_bound_exact",
    "moment_bound_scheme",
    "phi",
    "r0_deterministic_as_printed",
    "reproduction_numbers",
    "transform_logit",
    "transform_odds",
]

#: Relative distance from the boundaries 0 and K used when clamping I-space values.
CLAMP_EPS = 2.0 ** -52

_LOG_MAX = math.log(np.finfo(np.float64).max)

PARAM_KEYS = ("beta", "gamma", "b", "K", "sigma", "I0")


class ParameterError(ValueError):
    """Invalid model parameters or configuration."""


class DomainError(ValueError):
    """Argument outside the domain of a coefficient or transform."""


class BoundOverflowWarning(RuntimeWarning):
    """A theoretical bound exceeded the float64 range and was reported as inf."""


@dataclass(frozen=True)
class SISParams:
    """Epidemiological and noise parameters of the stochastic SIS model.

    ``sigma = 0`` is accepted and gives the deterministic logistic model.
    """

    beta: float
    gamma: float
    b: float
    K: float
    sigma: float

    def __post_init__(self):
        for name in ("beta", "gamma", "b", "K", "sigma"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ParameterError(f"{name} must be a real number, got {value!r}")
            value = float(value)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.beta <= 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be > 0, got {self.gamma}")
        if self.b < 0:
            raise ParameterError(f"b must be >= 0, got {self.b}")
        if self.K <= 0:
            raise ParameterError(f"K must be > 0, got {self.K}")
        if self.sigma < 0:
            raise ParameterError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def eta(self) -> float:
        """Net growth rate ``beta - b - gamma``."""
        return self.beta - self.b - self.gamma

    @property
    def removal(self) -> float:
        """``b + gamma``."""
        return self.b + self.gamma

    @property
    def sigma_K(self) -> float:
        """Diffusion coefficient of the log-odds process."""
        return self.sigma * self.K

    def replace(self, **changes) -> "SISParams":
        fields = dict(beta=self.beta, gamma=self.gamma, b=self.b, K=self.K, sigma=self.sigma)
        fields.update(changes)
        return SISParams(**fields)

    def as_dict(self) -> dict:
        return dict(beta=self.beta, gamma=self.gamma, b=self.b, K=self.K, sigma=self.sigma)


@dataclass(frozen=True)
class DerivedParams:
    eta: float
    r0_deterministic: float
    r0_stochastic: float
    extinction_exponent: float


@dataclass(frozen=True)
class ExtinctionCheck:
    r0s_below_one: bool
    sigma_sq_leq_beta_over_K2: bool
    sigma_sq_K2_leq_b_plus_gamma: bool

    @property
    def all_satisfied(self) -> bool:
        return self.r0s_below_one and self.sigma_sq_leq_beta_over_K2 and self.sigma_sq_K2_leq_b_plus_gamma


def load_params(source: str | Path | Mapping[str, Any]) -> tuple[SISParams, float]:
    """Read ``(SISParams, I0)`` from a JSON file path or an already-parsed mapping.

    The document must contain exactly the keys beta, gamma, b, K, sigma and I0.
    """
    if isinstance(source, Mapping):
        doc = dict(source)
    else:
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ParameterError("parameter document must be a JSON object")
    for key in doc:
        if key not in PARAM_KEYS:
            raise ParameterError(f"unknown parameter key {key!r}")
    for key in PARAM_KEYS:
        if key not in doc:
            raise ParameterError(f"missing parameter key {key!r}")
        if isinstance(doc[key], bool) or not isinstance(doc[key], (int, float)):
            raise ParameterError(f"parameter {key!r} must be a number, got {doc[key]!r}")
    params = SISParams(**{k: doc[k] for k in PARAM_KEYS if k != "I0"})
    I0 = float(doc["I0"])
    if not (0.0 < I0 < params.K):
        raise ParameterError(f"I0 must lie in the open interval (0, K={params.K}), got {I0}")
    return params, I0


def _finite(x, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{name} must be finite")
    return x


def _nonneg(x, name="x"):
    x = _finite(x, name)
    if np.any(x < 0):
        raise DomainError(f"{name} must be >= 0")
    return x


# --- coefficients of the SDE for I -------------------------------------------------

def drift_A(params: SISParams, x):
    """Drift ``eta*x - (beta/K)*x**2`` of the infected count."""
    x = _finite(x)
    return params.eta * x - (params.beta / params.K) * x * x


def diffusion_B(params: SISParams, x):
    """Diffusion ``sigma*(K - x)*x`` of the infected count."""
    x = _finite(x)
    return params.sigma * (params.K - x) * x


# --- transforms ----------------------------------------------------------------------

def _open_interval(K, x):
    x = _finite(x)
    if np.any((x <= 0) | (x >= K)):
        raise DomainError(f"state must lie in the open interval (0, {K})")
    return x


def clamp_to_domain(K: float, I):
    """Clamp I-space values into ``[eps*K, (1 - eps)*K]``.

    Returns ``(clamped, n_saturated)`` where ``n_saturated`` counts the entries
    that had to be moved.
    """
    I = np.asarray(I, dtype=np.float64)
    lo = CLAMP_EPS * K
    hi = (1.0 - CLAMP_EPS) * K
    out = np.clip(I, lo, hi)
    n_sat = int(np.count_nonzero((I < lo) | (I > hi)))
    return out, n_sat


def transform_odds(K: float, x):
    """``x/(K - x)`` for x in (0, K)."""
    x = _open_interval(K, x)
    return x / (K - x)


def _inverse_odds_raw(K, y):
    return K * y / (1.0 + y)


def inverse_odds(K: float, y, *, return_saturation: bool = False):
    """``K*y/(1 + y)`` for odds y >= 0.

    Strictly positive odds map into the open interval; results that round onto
    a boundary are clamped (see :func:`clamp_to_domain`). ``y = 0`` maps to 0.
    """
    y = _nonneg(y, "y")
    raw = _inverse_odds_raw(K, y)
    out, n_sat = clamp_to_domain(K, raw)
    out = np.where(y == 0, 0.0, out)
    n_sat -= int(np.count_nonzero(y == 0))
    out = out[()] if out.ndim == 0 else out
    return (out, n_sat) if return_saturation else out


def transform_logit(K: float, x):
    """``ln(x/(K - x))`` for x in (0, K)."""
    x = _open_interval(K, x)
    return np.log(x / (K - x))


def _inverse_logit_raw(K, v):
    # two-branch logistic avoids overflow of exp for large |v|
    e = np.exp(-np.abs(v))
    return np.where(v >= 0, K / (1.0 + e), K * e / (1.0 + e))


def inverse_logit(K: float, v, *, return_saturation: bool = False):
    """``K*e**v/(1 + e**v)`` for finite v, clamped into the open interval."""
    v = _finite(v, "v")
    out, n_sat = clamp_to_domain(K, _inverse_logit_raw(K, v))
    out = out[()] if out.ndim == 0 else out
    return (out, n_sat) if return_saturation else out


# --- coefficients of the transformed processes ---------------------------------------

def phi(params: SISParams, x):
    """Per-capita drift of the odds process, ``eta - (b+gamma)x + sigma^2 K^2 x/(1+x)``."""
    x = _nonneg(x)
    s2 = params.sigma_K ** 2
    return params.eta - params.removal * x + s2 * x / (1.0 + x)


def F_hat(params: SISParams, x):
    """Drift of the odds process, ``x * phi(x)``."""
    x = _nonneg(x)
    s2 = params.sigma_K ** 2
    return params.eta * x - params.removal * x * x + s2 * x * x / (1.0 + x)


def G(params: SISParams, x):
    """Diffusion of the odds process, ``sigma*K*x``."""
    x = _nonneg(x)
    return params.sigma_K * x


def F_logit(params: SISParams, v):
    """Drift of the log-odds process (constant diffusion ``sigma*K``)."""
    v = _finite(v, "v")
    s2 = params.sigma_K ** 2
    ev = np.exp(v)
    return params.eta - params.removal * ev + 0.5 * s2 - s2 / (1.0 + ev)


# --- thresholds ------------------------------------------------------------------------

def reproduction_numbers(params: SISParams) -> DerivedParams:
    """Deterministic and stochastic reproduction numbers.

    Uses ``R0_D = beta/(b + gamma)`` so that ``R0_S < 1`` is equivalent to a
    negative extinction exponent ``eta - sigma^2 K^2/2``. The variant with an
    extra factor ``1/K`` is available as :func:`r0_deterministic_as_printed`.
    """
    r0d = params.beta / params.removal
    r0s = r0d - params.sigma_K ** 2 / (2.0 * params.removal)
    return DerivedParams(
        eta=params.eta,
        r0_deterministic=r0d,
        r0_stochastic=r0s,
        extinction_exponent=params.eta - 0.5 * params.sigma_K ** 2,
    )


def r0_deterministic_as_printed(params: SISParams) -> float:
    """``beta/(K*(b + gamma))``; agrees with the primary form only when K = 1."""
    return params.beta / (params.K * params.removal)


def extinction_conditions(params: SISParams) -> ExtinctionCheck:
    """Parameter conditions for almost sure exponential extinction.

    The first two flags are sufficient for the exact process; the third is the
    extra requirement for the semi-discrete scheme.
    """
    d = reproduction_numbers(params)
    s2 = params.sigma ** 2
    return ExtinctionCheck(
        r0s_below_one=bool(d.r0_stochastic < 1.0),
        sigma_sq_leq_beta_over_K2=bool(s2 <= params.beta / params.K ** 2),
        sigma_sq_K2_leq_b_plus_gamma=bool(s2 * params.K ** 2 <= params.removal),
    )


def logistic_solution(params: SISParams, I0: float, t):
    """Closed-form solution of the noise-free model ``I' = eta*I - (beta/K)*I**2``."""
    t = np.asarray(t, dtype=np.float64)
    eta, beta, K = params.eta, params.beta, params.K
    if eta == 0.0:
        return I0 / (1.0 + beta * I0 * t / K)
    carrying = eta * K / beta
    return carrying / (1.0 + (carrying / I0 - 1.0) * np.exp(-eta * t))


# --- moment bounds -------------------------------------------------------------------

def _bound_from_log(log_value: float, what: str) -> float:
    if log_value > _LOG_MAX:
        warnings.warn(f"{what} overflows float64 (log value {log_value:.6g}); reporting inf",
                      BoundOverflowWarning, stacklevel=3)
        return math.inf
    return math.exp(log_value)


def log_moment_bound_scheme(params: SISParams, X0: float, T: float, p: float) -> float:
    """Natural log of :func:`moment_bound_scheme`."""
    if not p > 0:
        raise DomainError(f"p must be > 0, got {p}")
    if not T >= 0:
        raise DomainError(f"T must be >= 0, got {T}")
    if not X0 > 0:
        raise DomainError(f"X0 must be > 0, got {X0}")
    s2 = params.sigma_K ** 2
    return p * math.log(X0) + (params.eta + 0.5 * s2) * T * p + 0.5 * p * p * s2 * T


def moment_bound_scheme(params: SISParams, X0: float, T: float, p: float) -> float:
    """Envelope for ``E[X_n**p]`` of the semi-discrete odds iterates up to time T.

    ``X0**p * exp((eta + sigma^2 K^2/2) T p + p^2 sigma^2 K^2 T/2)``; inf (with a
    :class:`BoundOverflowWarning`) if it exceeds the float64 range.
    """
    log_value = log_moment_bound_scheme(params, X0, T, p)
    bound = _bound_from_log(log_value, f"scheme moment bound (p={p})")
    if math.isfinite(bound):
        # factor as X0**p * growth so that T = 0 reproduces X0**p bit for bit
        try:
            head = X0 ** p
        except OverflowError:
            return bound
        candidate = head * math.exp(log_value - p * math.log(X0))
        if head > 0 and math.isfinite(candidate):
            bound = candidate
    return bound


def log_moment_bound_exact(params: SISParams, I0: float, T: float, p: float) -> float:
    if not p > 0:
        raise DomainError(f"p must be > 0, got {p}")
    if not T >= 0:
        raise DomainError(f"T must be >= 0, got {T}")
    if not (0 < I0 < params.K):
        raise DomainError(f"I0 must lie in (0, {params.K}), got {I0}")
    eta, beta, K = params.eta, params.beta, params.K
    rate = max(eta, 2 * beta - eta, 2 * beta / K)
    return (-p * min(math.log(I0), math.log(K - I0))
            + p * rate * T + 0.5 * p * (p + 1) * params.sigma_K ** 2 * T)


def moment_bound_exact(params: SISParams, I0: float, T: float, p: float) -> float:
    """Constant bounding ``sup_t E[I_t**-p]`` and ``sup_t E[(K - I_t)**-p]`` on [0, T].

    ``max(I0**-p, (K - I0)**-p) * exp(p*max(eta, 2beta - eta, 2beta/K) T + p(p+1) sigma^2 K^2 T/2)``.
    """
    return _bound_from_log(log_moment_bound_exact(params, I0, T, p), f"exact moment bound (p={p})")


def exact_moment_envelopes(params: SISParams, I0: float, T: float, p: float) -> tuple[float, float]:
    """Bounds on ``sup_t E[z_t**p]`` and ``sup_t E[z_t**-p]`` for the exact odds process.

    Both equal ``K**p * sqrt(C_{2p})`` with C from :func:`moment_bound_exact`.
    """
    log_env = p * math.log(params.K) + 0.5 * log_moment_bound_exact(params, I0, T, 2 * p)
    env = _bound_from_log(log_env, f"exact odds moment envelope (p={p})")
    return env, env
