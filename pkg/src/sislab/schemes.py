"""Fixed-step integrators for the stochastic SIS model.

* ``EULER_MARUYAMA`` steps I directly and may leave (0, K).
* ``GRAY_YANG`` is Euler-Maruyama on the log-odds, mapped back by the logistic function.
* ``SEMI_DISCRETE`` freezes the per-capita drift of the odds at the left end of
  each step, which leaves a geometric Brownian motion that is solved exactly:
  ``X_{n+1} = X_n exp((phi(X_n) - sigma^2 K^2/2) dt + sigma K dW_n)``.

The ``*_step`` functions work on scalars or arrays and raise on invalid input.
:func:`simulate_batch` runs many paths at once and turns numerical breakdown
into per-path failure flags instead of exceptions.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import model
from .model import DomainError, SISParams
from .noise import ArgumentError, WienerGrid

__all__ = [
    "OVERFLOW_LIMIT",
    "BatchResult",
    "SchemeKind",
    "SchemeOverflowError",
    "Trajectory",
    "em_step",
    "exponential_step",
    "gray_yang_step",
    "semi_discrete_step",
    "simulate",
    "simulate_batch",
]

#: Largest magnitude of a natural-log-scale exponent a step may feed to ``exp``.
OVERFLOW_LIMIT = 700.0


class SchemeKind(enum.Enum):
    EULER_MARUYAMA = "em"
    GRAY_YANG = "gy"
    SEMI_DISCRETE = "sd"

    @classmethod
    def parse(cls, value) -> "SchemeKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            try:
                return cls[str(value).upper()]
            except KeyError:
                raise ArgumentError(f"unknown scheme {value!r}; expected one of em, gy, sd") from None


class SchemeOverflowError(ArithmeticError):
    """A single step produced a non-finite state or an exponent beyond OVERFLOW_LIMIT."""


# --- raw kernels (no validation; shared by the step functions and the driver) ----------

def _em_kernel(p: SISParams, I, dt, dW):
    drift = p.eta * I - (p.beta / p.K) * I * I
    diff = p.sigma * (p.K - I) * I
    return I + drift * dt + diff * dW


def _gy_kernel(p: SISParams, X, dt, dW):
    s2 = p.sigma_K ** 2
    ex = np.exp(X)
    F = p.eta - p.removal * ex + 0.5 * s2 - s2 / (1.0 + ex)
    return X + F * dt + p.sigma_K * dW


def _sd_exponent(p: SISParams, X, dt, dW):
    s2 = p.sigma_K ** 2
    rate = p.eta - p.removal * X + s2 * X / (1.0 + X) - 0.5 * s2
    return rate * dt + p.sigma_K * dW


def _check_dt(dt):
    if not (np.isfinite(dt) and dt > 0):
        raise ArgumentError(f"dt must be positive and finite, got {dt}")


# --- single steps --------------------------------------------------------------------------

def em_step(params: SISParams, I_n, dt: float, dW):
    """Euler-Maruyama step ``I + A(I) dt + B(I) dW`` (not domain preserving)."""
    _check_dt(dt)
    I_n = np.asarray(I_n, dtype=np.float64)
    if not np.all(np.isfinite(I_n)):
        raise SchemeOverflowError("non-finite Euler-Maruyama state")
    return _em_kernel(params, I_n, dt, np.asarray(dW, dtype=np.float64))


def gray_yang_step(params: SISParams, X_n, dt: float, dW):
    """Euler-Maruyama step for the log-odds, ``X + F(X) dt + sigma K dW``."""
    _check_dt(dt)
    X_n = np.asarray(X_n, dtype=np.float64)
    if not np.all(np.abs(X_n) <= OVERFLOW_LIMIT):
        raise SchemeOverflowError(f"log-odds state beyond +-{OVERFLOW_LIMIT} or non-finite")
    return _gy_kernel(params, X_n, dt, np.asarray(dW, dtype=np.float64))


def exponential_step(x, rate, noise_scale, dt: float, dW):
    """Exact step of ``dX = rate' X dt + noise_scale X dW`` where ``rate = rate' - noise_scale^2/2``.

    Returns ``x * exp(rate*dt + noise_scale*dW)``.
    """
    expo = np.asarray(rate, dtype=np.float64) * dt + noise_scale * np.asarray(dW, dtype=np.float64)
    if not np.all(np.abs(expo) <= OVERFLOW_LIMIT):
        raise SchemeOverflowError(f"step exponent beyond +-{OVERFLOW_LIMIT} or non-finite")
    return np.asarray(x, dtype=np.float64) * np.exp(expo)


def semi_discrete_step(params: SISParams, Xh_n, dt: float, dW):
    """Semi-discrete odds step ``X exp((phi(X) - sigma^2 K^2/2) dt + sigma K dW)``.

    Positive input gives positive output; no clamping is involved.
    """
    _check_dt(dt)
    Xh_n = np.asarray(Xh_n, dtype=np.float64)
    if not np.all(np.isfinite(Xh_n)) or np.any(Xh_n <= 0):
        raise DomainError("semi-discrete state must be positive and finite")
    rate = model.phi(params, Xh_n) - 0.5 * params.sigma_K ** 2
    return exponential_step(Xh_n, rate, params.sigma_K, dt, dW)


# --- path driver ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BatchResult:
    """States of ``n_paths`` paths on a common grid; row ``i`` is one path."""

    scheme: SchemeKind
    dt: float
    states_I: np.ndarray           # (n_paths, n_steps + 1)
    states_internal: Optional[np.ndarray]  # None for Euler-Maruyama
    violations: np.ndarray         # per-path count of nodes outside (0, K)
    failed_at: np.ndarray          # per-path first failed node, -1 if none
    saturations: np.ndarray        # per-path count of clamped I values

    @property
    def n_paths(self) -> int:
        return self.states_I.shape[0]

    @property
    def failed(self) -> np.ndarray:
        return self.failed_at >= 0


def _initial_internal(scheme, params, I0):
    if scheme is SchemeKind.SEMI_DISCRETE:
        return float(model.transform_odds(params.K, I0))
    if scheme is SchemeKind.GRAY_YANG:
        return float(model.transform_logit(params.K, I0))
    return float(I0)


def simulate_batch(params: SISParams, scheme, I0: float, increments: np.ndarray, dt: float) -> BatchResult:
    """Run one scheme over every row of ``increments`` (shape ``(n_paths, n_steps)``)."""
    scheme = SchemeKind.parse(scheme)
    _check_dt(dt)
    K = params.K
    if not (0.0 < I0 < K):
        raise DomainError(f"I0 must lie in the open interval (0, {K}), got {I0}")
    inc = np.asarray(increments, dtype=np.float64)
    if inc.ndim != 2 or inc.shape[1] < 1:
        raise ArgumentError("increments must have shape (n_paths, n_steps) with n_steps >= 1")
    n_paths, n_steps = inc.shape
    incT = np.ascontiguousarray(inc.T)

    states = np.empty((n_steps + 1, n_paths))
    x = np.full(n_paths, _initial_internal(scheme, params, I0))
    states[0] = x
    failed_at = np.full(n_paths, -1, dtype=np.int64)
    violations = np.zeros(n_paths, dtype=np.int64)

    for n in range(n_steps):
        dW = incT[n]
        if scheme is SchemeKind.SEMI_DISCRETE:
            expo = _sd_exponent(params, x, dt, dW)
            ok = np.abs(expo) <= OVERFLOW_LIMIT
            x = x * np.exp(np.where(ok, expo, 0.0))
        elif scheme is SchemeKind.GRAY_YANG:
            x = _gy_kernel(params, x, dt, dW)
            ok = np.abs(x) <= OVERFLOW_LIMIT
        else:
            x = _em_kernel(params, x, dt, dW)
            ok = np.isfinite(x)
            violations += (x <= 0.0) | (x >= K)
        if not ok.all():
            bad = ~ok
            failed_at[bad & (failed_at < 0)] = n + 1
            x = np.where(bad, np.nan, x)
        states[n + 1] = x

    internal = np.ascontiguousarray(states.T)
    if scheme is SchemeKind.EULER_MARUYAMA:
        return BatchResult(scheme, float(dt), internal, None, violations, failed_at,
                           np.zeros(n_paths, dtype=np.int64))
    if scheme is SchemeKind.SEMI_DISCRETE:
        raw = model._inverse_odds_raw(K, internal)
    else:
        raw = model._inverse_logit_raw(K, internal)
    lo, hi = model.CLAMP_EPS * K, (1.0 - model.CLAMP_EPS) * K
    saturations = np.count_nonzero((raw < lo) | (raw > hi), axis=1).astype(np.int64)
    states_I = np.clip(raw, lo, hi)
    return BatchResult(scheme, float(dt), states_I, internal, violations, failed_at, saturations)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One path of one scheme on a uniform grid."""

    scheme: SchemeKind
    times: np.ndarray
    states_I: np.ndarray
    states_internal: Optional[np.ndarray]
    domain_violations: int
    failed_at: Optional[int]
    saturations: int
    K: float

    @property
    def failed(self) -> bool:
        return self.failed_at is not None

    @property
    def states_S(self) -> np.ndarray:
        """Susceptible counts ``K - I``."""
        return self.K - self.states_I

    def to_csv(self, dest=None) -> str:
        """Render as CSV (``t,I,internal,scheme``); also written to ``dest`` if given."""
        buf = io.StringIO(newline="")
        buf.write("t,I,internal,scheme\n")
        tag = self.scheme.value
        internal = self.states_internal
        for j in range(self.times.size):
            inner = "" if internal is None else f"{internal[j]:.17g}"
            buf.write(f"{self.times[j]:.17g},{self.states_I[j]:.17g},{inner},{tag}\n")
        text = buf.getvalue()
        if dest is not None:
            Path(dest).write_text(text, encoding="utf-8", newline="")
        return text


def simulate(params: SISParams, scheme, I0: float, grid: WienerGrid) -> Trajectory:
    """Run ``scheme`` from ``I0`` over the increments of ``grid``."""
    res = simulate_batch(params, scheme, I0, grid.increments[None, :], grid.dt)
    failed_at = int(res.failed_at[0])
    return Trajectory(
        scheme=res.scheme,
        times=grid.times,
        states_I=res.states_I[0],
        states_internal=None if res.states_internal is None else res.states_internal[0],
        domain_violations=int(res.violations[0]),
        failed_at=None if failed_at < 0 else failed_at,
        saturations=int(res.saturations[0]),
        K=params.K,
    )
