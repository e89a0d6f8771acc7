"""Monte Carlo experiments on the SIS schemes.

Paths are processed in fixed blocks of :data:`BLOCK_SIZE` consecutive path
indices. Blocks may run on a thread pool, but every block computes the same
numbers no matter how many threads there are, and results are reduced in
ascending path order, so every report is a pure function of its arguments.
"""
from __future__ import annotations

import enum
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import model
from .model import SISParams
from .noise import ArgumentError, coarsen_increments, generate_increments
from .schemes import SchemeKind, simulate_batch

__all__ = [
    "BLOCK_SIZE",
    "CSV_COLUMNS",
    "BenchReport",
    "CensusReport",
    "ConvergenceReport",
    "DifferenceReport",
    "EngineError",
    "MomentReport",
    "ReferenceMode",
    "StabilityReport",
    "bench_error_vs_time",
    "domain_violation_census",
    "fit_order",
    "moment_check",
    "scheme_difference",
    "stability_experiment",
    "strong_error",
    "sup_errors",
    "wilson_interval",
]

BLOCK_SIZE = 64
EXCLUSION_BUDGET = 0.01
Z95 = 1.959963984540054

CSV_COLUMNS = ("scheme", "dt", "error", "ci_half", "order_fit_slope", "order_fit_intercept", "n_paths", "seed")


class EngineError(RuntimeError):
    """An experiment could not produce a trustworthy result (e.g. too many failed paths)."""


class ReferenceMode(enum.Enum):
    SELF_FINEST = "self"
    CROSS_SCHEME = "gy"
    LOGISTIC_EXACT = "logistic"

    @classmethod
    def parse(cls, value) -> "ReferenceMode":
        if isinstance(value, cls):
            return value
        for mode in cls:
            if str(value).lower() in (mode.value, mode.name.lower()):
                return mode
        raise ArgumentError(f"unknown reference mode {value!r}")


# --- plumbing ------------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if hasattr(obj, "__dataclass_fields__"):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in fields(obj)}
    return obj


def _write(text: str, dest) -> str:
    if dest is not None:
        Path(dest).write_text(text, encoding="utf-8", newline="")
    return text


class _Exportable:
    def to_json(self, dest=None) -> str:
        return _write(json.dumps(_jsonable(self), indent=2, allow_nan=False) + "\n", dest)


def _blocks(n_paths: int) -> list[tuple[int, int]]:
    return [(s, min(s + BLOCK_SIZE, n_paths)) for s in range(0, n_paths, BLOCK_SIZE)]


def _map_blocks(fn: Callable[[int, int], object], n_paths: int, threads: int = 1) -> list:
    blocks = _blocks(n_paths)
    workers = (os.cpu_count() or 1) if threads == 0 else int(threads)
    if workers < 0:
        raise ArgumentError(f"threads must be >= 0, got {threads}")
    if workers <= 1 or len(blocks) == 1:
        return [fn(s, e) for s, e in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), blocks))


def _n_steps(T: float, dt: float) -> int:
    n = T / dt
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise ArgumentError(f"step size {dt} does not divide the horizon T={T}")
    return k


def _check_paths(n_paths, minimum=1):
    if int(n_paths) != n_paths or n_paths < minimum:
        raise ArgumentError(f"n_paths must be an integer >= {minimum}, got {n_paths}")
    return int(n_paths)


def _check_budget(n_excluded: int, n_paths: int, what: str):
    if n_excluded > EXCLUSION_BUDGET * n_paths:
        raise EngineError(f"{what}: {n_excluded} of {n_paths} paths failed numerically "
                          f"(budget {EXCLUSION_BUDGET:.0%})")


def _mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / values.size


def _mean_ci(values: np.ndarray) -> tuple[float, float]:
    m = _mean(values)
    if values.size < 2:
        return m, math.nan
    var = math.fsum(((values - m) ** 2).tolist()) / (values.size - 1)
    return m, Z95 * math.sqrt(var / values.size)


def fit_order(step_sizes: Sequence[float], errors: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope and intercept of ``log2(error)`` against ``log2(dt)``.

    Returns ``(nan, nan)`` if any error is not strictly positive and finite.
    """
    h = np.asarray(step_sizes, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    if h.size < 2 or not np.all(np.isfinite(e) & (e > 0)):
        return math.nan, math.nan
    slope, intercept = np.polyfit(np.log2(h), np.log2(e), 1)
    return float(slope), float(intercept)


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion ``k/n``."""
    if n <= 0:
        return math.nan, math.nan
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


# --- strong error --------------------------------------------------------------------------

def _dyadic_plan(T, step_sizes, ref_dt):
    sizes = [float(h) for h in step_sizes]
    if not sizes:
        raise ArgumentError("at least one step size is required")
    if len(set(sizes)) != len(sizes):
        raise ArgumentError("step sizes must be distinct")
    n_fine = _n_steps(T, ref_dt)
    factors = []
    for h in sizes:
        n = _n_steps(T, h)
        m, rem = divmod(n_fine, n)
        if rem or m & (m - 1):
            raise ArgumentError(f"step size {h} is not a dyadic coarsening of the reference step {ref_dt}")
        factors.append(m)
    return sizes, n_fine, factors


def sup_errors(params: SISParams, scheme, I0: float, T: float, step_sizes: Sequence[float],
               n_paths: int, reference_mode=ReferenceMode.SELF_FINEST, master_seed: int = 0,
               ref_dt: Optional[float] = None, threads: int = 1):
    """Per-path ``sup_n |Y_n - ref_n|`` over the nodes of each coarse grid.

    Each path draws one Wiener path on the reference grid; every tested step
    size sees the block sums of those increments.

    Returns ``(sups, failed)``, both of shape ``(len(step_sizes), n_paths)``.
    """
    scheme = SchemeKind.parse(scheme)
    mode = ReferenceMode.parse(reference_mode)
    n_paths = _check_paths(n_paths)
    if ref_dt is None:
        ref_dt = min(step_sizes) / 8 if mode is ReferenceMode.SELF_FINEST else min(step_sizes)
    if mode is ReferenceMode.LOGISTIC_EXACT and params.sigma != 0:
        raise ArgumentError("the logistic reference is exact only for sigma = 0")
    sizes, n_fine, factors = _dyadic_plan(T, step_sizes, ref_dt)

    def block(start, stop):
        inc = generate_increments(master_seed, range(start, stop), n_fine, ref_dt)
        ref = simulate_batch(params, scheme, I0, inc, ref_dt) if mode is ReferenceMode.SELF_FINEST else None
        sups = np.empty((len(sizes), stop - start))
        failed = np.zeros((len(sizes), stop - start), dtype=bool)
        for k, (h, m) in enumerate(zip(sizes, factors)):
            cinc = inc if m == 1 else coarsen_increments(inc, m)
            res = simulate_batch(params, scheme, I0, cinc, h)
            bad = res.failed.copy()
            if mode is ReferenceMode.SELF_FINEST:
                ref_I = ref.states_I[:, ::m]
                bad |= ref.failed
            elif mode is ReferenceMode.CROSS_SCHEME:
                other = res if scheme is SchemeKind.GRAY_YANG else simulate_batch(
                    params, SchemeKind.GRAY_YANG, I0, cinc, h)
                ref_I = other.states_I
                bad |= other.failed
            else:
                times = h * np.arange(cinc.shape[1] + 1)
                ref_I = model.logistic_solution(params, I0, times)[None, :]
            with np.errstate(invalid="ignore"):
                sups[k] = np.max(np.abs(res.states_I - ref_I), axis=1)
            failed[k] = bad
        return sups, failed

    parts = _map_blocks(block, n_paths, threads)
    sups = np.concatenate([p[0] for p in parts], axis=1)
    failed = np.concatenate([p[1] for p in parts], axis=1)
    return sups, failed


@dataclass(frozen=True)
class ConvergenceReport(_Exportable):
    """Strong-error estimates ``(E sup_n |Y_n - ref_n|^q)^(1/q)`` per step size."""

    scheme: SchemeKind
    reference_mode: ReferenceMode
    step_sizes: tuple
    errors: tuple
    ci_half_widths: tuple
    fitted_order: float
    fit_intercept: float
    n_paths: int
    n_excluded: int
    q: float
    master_seed: int
    ref_dt: float
    T: float

    def rows(self):
        for h, e, ci in zip(self.step_sizes, self.errors, self.ci_half_widths):
            yield (self.scheme.value, h, e, ci, self.fitted_order, self.fit_intercept,
                   self.n_paths, self.master_seed)

    def to_csv(self, dest=None) -> str:
        return _write(_csv_text(self.rows()), dest)

    def summary(self) -> str:
        errs = ", ".join(f"{h:.4g}: {e:.3e}" for h, e in zip(self.step_sizes, self.errors))
        return (f"{self.scheme.name} strong error (q={self.q:g}, reference {self.reference_mode.name}, "
                f"{self.n_paths} paths, {self.n_excluded} excluded): {errs}; "
                f"fitted order {self.fitted_order:.4f}.")


def _csv_text(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(_fmt(v) if not isinstance(v, str) else v for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def strong_error(params: SISParams, scheme, I0: float, T: float, step_sizes: Sequence[float],
                 n_paths: int, reference_mode=ReferenceMode.SELF_FINEST, master_seed: int = 0,
                 q: float = 1.0, ref_dt: Optional[float] = None, threads: int = 1) -> ConvergenceReport:
    """Estimate the strong error of ``scheme`` at each step size and fit the order.

    ``SELF_FINEST`` compares against the same scheme on a reference grid
    (default 8 times finer than the smallest step), ``CROSS_SCHEME`` against
    the Gray-Yang scheme on the same coarse grid, ``LOGISTIC_EXACT`` against the
    closed-form noise-free solution (sigma = 0 only).
    """
    if len(step_sizes) < 3:
        raise ArgumentError("a convergence study needs at least 3 step sizes")
    n_paths = _check_paths(n_paths, 100)
    if not q > 0:
        raise ArgumentError(f"q must be > 0, got {q}")
    mode = ReferenceMode.parse(reference_mode)
    if ref_dt is None:
        ref_dt = min(step_sizes) / 8 if mode is ReferenceMode.SELF_FINEST else min(step_sizes)
    sups, failed = sup_errors(params, scheme, I0, T, step_sizes, n_paths, mode, master_seed,
                              ref_dt, threads)
    keep = ~failed.any(axis=0)
    n_excluded = int(n_paths - keep.sum())
    _check_budget(n_excluded, n_paths, "strong_error")
    errors, halves = [], []
    for row in sups[:, keep]:
        m, h = _mean_ci(row ** q)
        errors.append(m ** (1.0 / q))
        if q != 1:
            # delta method for the q-th root
            h = h * m ** (1.0 / q - 1.0) / q if m > 0 else math.nan
        halves.append(h)
    slope, intercept = fit_order(step_sizes, errors)
    return ConvergenceReport(
        scheme=SchemeKind.parse(scheme), reference_mode=mode,
        step_sizes=tuple(float(h) for h in step_sizes), errors=tuple(errors),
        ci_half_widths=tuple(halves), fitted_order=slope, fit_intercept=intercept,
        n_paths=n_paths, n_excluded=n_excluded, q=float(q), master_seed=int(master_seed),
        ref_dt=float(ref_dt), T=float(T),
    )


# --- scheme difference -----------------------------------------------------------------------

@dataclass(frozen=True)
class DifferenceReport(_Exportable):
    """``sup_n |Y^a_n - Y^b_n|`` of two schemes driven by identical increments."""

    scheme_a: SchemeKind
    scheme_b: SchemeKind
    dt: float
    T: float
    per_path_sup: np.ndarray
    mean_sup: float
    ci_half: float
    mean_trace: Optional[np.ndarray]
    n_paths: int
    n_excluded: int
    master_seed: int

    def summary(self) -> str:
        return (f"mean sup |{self.scheme_a.value} - {self.scheme_b.value}| at dt={self.dt:g}: "
                f"{self.mean_sup:.3e} (+- {self.ci_half:.2e}).")


def scheme_difference(params: SISParams, I0: float, T: float, dt: float, n_paths: int,
                      master_seed: int = 0, scheme_a=SchemeKind.SEMI_DISCRETE,
                      scheme_b=SchemeKind.GRAY_YANG, traces: bool = False,
                      threads: int = 1) -> DifferenceReport:
    """Pathwise distance between two schemes on shared Wiener increments."""
    a, b = SchemeKind.parse(scheme_a), SchemeKind.parse(scheme_b)
    n_paths = _check_paths(n_paths)
    n = _n_steps(T, dt)

    def block(start, stop):
        inc = generate_increments(master_seed, range(start, stop), n, dt)
        ra = simulate_batch(params, a, I0, inc, dt)
        rb = ra if b is a else simulate_batch(params, b, I0, inc, dt)
        diff = np.abs(ra.states_I - rb.states_I)
        bad = ra.failed | rb.failed
        with np.errstate(invalid="ignore"):
            sup = np.max(diff, axis=1)
        trace = np.sum(diff[~bad], axis=0) if traces else None
        return sup, bad, trace

    parts = _map_blocks(block, n_paths, threads)
    sup = np.concatenate([p[0] for p in parts])
    bad = np.concatenate([p[1] for p in parts])
    n_excluded = int(bad.sum())
    _check_budget(n_excluded, n_paths, "scheme_difference")
    mean, half = _mean_ci(sup[~bad])
    trace = None
    if traces:
        total = np.zeros(n + 1)
        for p in parts:
            total += p[2]
        trace = total / (n_paths - n_excluded)
    return DifferenceReport(a, b, float(dt), float(T), sup, mean, half, trace, n_paths,
                            n_excluded, int(master_seed))


# --- extinction ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport(_Exportable):
    """Per-path growth exponents ``ln(Y_N)/(N dt)`` of the semi-discrete scheme."""

    horizon: float
    dt: float
    per_path_exponents: np.ndarray
    terminal_I: np.ndarray
    clamped: np.ndarray
    theoretical_bound: float
    tolerance: float
    fraction_below_bound_plus_tol: float
    conditions: model.ExtinctionCheck
    n_paths: int
    n_excluded: int
    master_seed: int

    @property
    def applicable(self) -> bool:
        return self.conditions.all_satisfied

    @property
    def status(self) -> str:
        return "APPLICABLE" if self.applicable else "NOT_APPLICABLE"

    def to_csv(self, dest=None) -> str:
        lines = ["path_index,exponent,terminal_I,clamped"]
        for i, (e, y, c) in enumerate(zip(self.per_path_exponents, self.terminal_I, self.clamped)):
            lines.append(f"{i},{_fmt(e)},{_fmt(y)},{int(c)}")
        return _write("\n".join(lines) + "\n", dest)

    def summary(self) -> str:
        return (f"extinction check {self.status}: theoretical exponent bound {self.theoretical_bound:.6g}; "
                f"{self.fraction_below_bound_plus_tol:.1%} of {self.n_paths - self.n_excluded} path exponents "
                f"<= bound + {self.tolerance:g} at T={self.horizon:g}, dt={self.dt:g} "
                f"(median exponent {np.nanmedian(self.per_path_exponents):.4g}, "
                f"median terminal I {np.nanmedian(self.terminal_I):.3e}).")


def stability_experiment(params: SISParams, I0: float, T: float, dt: float, n_paths: int,
                         master_seed: int = 0, tolerance: float = 0.05,
                         threads: int = 1) -> StabilityReport:
    """Long-horizon extinction run of the semi-discrete scheme.

    The report is produced even when the extinction conditions fail; it is
    then marked ``NOT_APPLICABLE`` and a warning is issued.
    """
    n_paths = _check_paths(n_paths)
    n = _n_steps(T, dt)
    conditions = model.extinction_conditions(params)
    if not conditions.all_satisfied:
        warnings.warn(f"extinction conditions not satisfied: {conditions}", RuntimeWarning, stacklevel=2)
    floor = model.CLAMP_EPS * params.K

    def block(start, stop):
        inc = generate_increments(master_seed, range(start, stop), n, dt)
        res = simulate_batch(params, SchemeKind.SEMI_DISCRETE, I0, inc, dt)
        return res.states_I[:, -1].copy(), res.failed

    parts = _map_blocks(block, n_paths, threads)
    terminal = np.concatenate([p[0] for p in parts])
    bad = np.concatenate([p[1] for p in parts])
    n_excluded = int(bad.sum())
    _check_budget(n_excluded, n_paths, "stability_experiment")
    exponents = np.log(terminal) / (n * dt)
    bound = model.reproduction_numbers(params).extinction_exponent
    good = exponents[~bad]
    frac = float(np.count_nonzero(good <= bound + tolerance)) / good.size
    return StabilityReport(
        horizon=float(T), dt=float(dt), per_path_exponents=exponents, terminal_I=terminal,
        clamped=terminal <= floor, theoretical_bound=bound, tolerance=float(tolerance),
        fraction_below_bound_plus_tol=frac, conditions=conditions, n_paths=n_paths,
        n_excluded=n_excluded, master_seed=int(master_seed),
    )


# --- moments -------------------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentRow:
    kind: str        # "scheme", "exact_pos" or "exact_neg"
    p: float
    empirical: float
    bound: float
    within: bool
    overflow: bool


@dataclass(frozen=True)
class MomentReport(_Exportable):
    T: float
    dt: float
    proxy_dt: float
    rows: tuple
    n_paths: int
    master_seed: int

    def to_csv(self, dest=None) -> str:
        lines = ["kind,p,empirical,bound,within,overflow"]
        for r in self.rows:
            lines.append(f"{r.kind},{_fmt(r.p)},{_fmt(r.empirical)},{_fmt(r.bound)},"
                         f"{int(r.within)},{int(r.overflow)}")
        return _write("\n".join(lines) + "\n", dest)

    def summary(self) -> str:
        parts = [f"{r.kind} p={r.p:g}: {r.empirical:.4g} vs {r.bound:.4g} ({'ok' if r.within else 'EXCEEDED'})"
                 for r in self.rows]
        return "moment envelopes: " + "; ".join(parts) + "."


def _bound_quiet(fn, *args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", model.BoundOverflowWarning)
        value = fn(*args)
    return value, bool(caught) or not math.isfinite(value)


def moment_check(params: SISParams, I0: float, T: float, dt: float, n_paths: int,
                 p_list: Sequence[float], master_seed: int = 0, proxy_refine: int = 8,
                 threads: int = 1) -> MomentReport:
    """Compare empirical moments with their theoretical envelopes.

    ``scheme`` rows: ``max_n mean_paths X_n^p`` for the semi-discrete odds at
    step ``dt`` against the scheme envelope. ``exact_pos``/``exact_neg`` rows:
    ``max_n mean_paths X_n^(+-p)`` on a grid ``proxy_refine`` times finer,
    standing in for the exact odds process, against the exact-process envelope.
    """
    p_list = [float(p) for p in p_list]
    if not p_list or any(not p > 0 for p in p_list):
        raise ArgumentError("p_list must contain positive orders")
    n_paths = _check_paths(n_paths)
    X0 = float(model.transform_odds(params.K, I0))
    proxy_dt = dt / proxy_refine
    if T == 0:
        rows = []
        for p in p_list:
            bound, over = _bound_quiet(model.moment_bound_scheme, params, X0, 0.0, p)
            emp = X0 ** p
            rows.append(MomentRow("scheme", p, emp, bound, emp <= bound, over))
        return MomentReport(0.0, float(dt), proxy_dt, tuple(rows), n_paths, int(master_seed))
    n = _n_steps(T, dt)
    n_fine = n * int(proxy_refine)
    P = np.asarray(p_list)

    def powers(x, signs):
        with np.errstate(over="ignore"):
            return np.stack([np.sum(x ** (s * p), axis=0) for s in signs for p in P])

    def block(start, stop):
        fine_inc = generate_increments(master_seed, range(start, stop), n_fine, proxy_dt)
        fine = simulate_batch(params, SchemeKind.SEMI_DISCRETE, I0, fine_inc, proxy_dt)
        inc = coarsen_increments(fine_inc, proxy_refine)
        coarse = simulate_batch(params, SchemeKind.SEMI_DISCRETE, I0, inc, dt)
        bad = coarse.failed | fine.failed
        return (powers(coarse.states_internal[~bad], (1,)),
                powers(fine.states_internal[~bad], (1, -1)), bad)

    parts = _map_blocks(block, n_paths, threads)
    bad = np.concatenate([p[2] for p in parts])
    n_good = n_paths - int(bad.sum())
    _check_budget(n_paths - n_good, n_paths, "moment_check")
    sums_scheme = np.zeros((len(P), n + 1))
    sums_exact = np.zeros((2 * len(P), n_fine + 1))
    for s, e, _ in parts:
        sums_scheme += s
        sums_exact += e
    mean_scheme = (sums_scheme / n_good).max(axis=1)
    mean_exact = (sums_exact / n_good).max(axis=1)

    rows = []
    for i, p in enumerate(p_list):
        bound, over = _bound_quiet(model.moment_bound_scheme, params, X0, T, p)
        emp = float(mean_scheme[i])
        rows.append(MomentRow("scheme", p, emp, bound, emp <= bound, over or not math.isfinite(emp)))
    for i, p in enumerate(p_list):
        env, over = _bound_quiet(lambda *a: model.exact_moment_envelopes(*a)[0], params, I0, T, p)
        for kind, emp in (("exact_pos", mean_exact[i]), ("exact_neg", mean_exact[len(P) + i])):
            emp = float(emp)
            rows.append(MomentRow(kind, p, emp, env, emp <= env, over or not math.isfinite(emp)))
    return MomentReport(float(T), float(dt), proxy_dt, tuple(rows), n_paths, int(master_seed))


# --- domain violations ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CensusRow:
    scheme: SchemeKind
    dt: float
    n_paths: int
    n_violating: int
    fraction: float
    wilson_low: float
    wilson_high: float
    n_failed: int


@dataclass(frozen=True)
class CensusReport(_Exportable):
    rows: tuple
    master_seed: int

    def fraction(self, scheme, dt) -> float:
        scheme = SchemeKind.parse(scheme)
        for r in self.rows:
            if r.scheme is scheme and r.dt == dt:
                return r.fraction
        raise KeyError((scheme, dt))

    def to_csv(self, dest=None) -> str:
        lines = ["scheme,dt,n_paths,n_violating,fraction,wilson_low,wilson_high,n_failed"]
        for r in self.rows:
            lines.append(f"{r.scheme.value},{_fmt(r.dt)},{r.n_paths},{r.n_violating},{_fmt(r.fraction)},"
                         f"{_fmt(r.wilson_low)},{_fmt(r.wilson_high)},{r.n_failed}")
        return _write("\n".join(lines) + "\n", dest)

    def summary(self) -> str:
        parts = [f"{r.scheme.value} dt={r.dt:g}: {r.fraction:.2%}" for r in self.rows]
        return "fraction of paths leaving (0, K): " + "; ".join(parts) + "."


def domain_violation_census(params: SISParams, I0: float, T: float, dt_list: Sequence[float],
                            n_paths: int, master_seed: int = 0,
                            schemes=(SchemeKind.EULER_MARUYAMA, SchemeKind.GRAY_YANG,
                                     SchemeKind.SEMI_DISCRETE),
                            threads: int = 1) -> CensusReport:
    """Fraction of paths with at least one node outside (0, K), per scheme and step."""
    n_paths = _check_paths(n_paths)
    schemes = [SchemeKind.parse(s) for s in schemes]
    K = params.K
    rows = []
    for dt in dt_list:
        n = _n_steps(T, dt)

        def block(start, stop):
            inc = generate_increments(master_seed, range(start, stop), n, dt)
            out = []
            for s in schemes:
                res = simulate_batch(params, s, I0, inc, dt)
                if s is SchemeKind.EULER_MARUYAMA:
                    hit = res.violations > 0
                else:
                    I = res.states_I
                    hit = np.any((I <= 0) | (I >= K), axis=1)
                out.append((hit, res.failed))
            return out

        parts = _map_blocks(block, n_paths, threads)
        for j, s in enumerate(schemes):
            hit = np.concatenate([p[j][0] for p in parts])
            failed = np.concatenate([p[j][1] for p in parts])
            k = int(hit.sum())
            lo, hi = wilson_interval(k, n_paths)
            rows.append(CensusRow(s, float(dt), n_paths, k, k / n_paths, lo, hi, int(failed.sum())))
    return CensusReport(tuple(rows), int(master_seed))


# --- cost versus accuracy -------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    scheme: SchemeKind
    dt: float
    error: float
    wall_seconds: float
    n_steps: int
    per_step_seconds: float


@dataclass(frozen=True)
class BenchReport(_Exportable):
    convergence: tuple   # one ConvergenceReport per scheme
    rows: tuple          # BenchRow per (scheme, dt)
    n_paths: int
    master_seed: int
    repeats: int

    def to_csv(self, dest=None) -> str:
        """Error table in the common report schema (timings excluded, so it is reproducible)."""
        rows = [r for rep in self.convergence for r in rep.rows()]
        return _write(_csv_text(rows), dest)

    def timing_csv(self, dest=None) -> str:
        lines = ["scheme,dt,error,wall_seconds,n_steps,per_step_seconds"]
        for r in self.rows:
            lines.append(f"{r.scheme.value},{_fmt(r.dt)},{_fmt(r.error)},{_fmt(r.wall_seconds)},"
                         f"{r.n_steps},{_fmt(r.per_step_seconds)}")
        return _write("\n".join(lines) + "\n", dest)

    def summary(self) -> str:
        parts = [f"{r.scheme.value} dt={r.dt:g}: error {r.error:.3e} in {r.wall_seconds:.3g}s"
                 for r in self.rows]
        return "error versus time: " + "; ".join(parts) + "."


def _time_stepping(params, scheme, I0, inc, dt, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        for s, e in _blocks(inc.shape[0]):
            simulate_batch(params, scheme, I0, inc[s:e], dt)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_error_vs_time(params: SISParams, I0: float, T: float, dt_list: Sequence[float],
                        n_paths: int, master_seed: int = 0,
                        schemes=(SchemeKind.GRAY_YANG, SchemeKind.SEMI_DISCRETE),
                        repeats: int = 3, ref_dt: Optional[float] = None,
                        threads: int = 1) -> BenchReport:
    """Strong error (self-finest reference) and stepping wall time for each scheme and step.

    Timings cover only the stepping of pre-generated increments, single threaded,
    best of ``repeats``; ``threads`` only affects the error computation.
    """
    schemes = [SchemeKind.parse(s) for s in schemes]
    reports, rows = [], []
    for s in schemes:
        rep = strong_error(params, s, I0, T, dt_list, n_paths, ReferenceMode.SELF_FINEST,
                           master_seed, ref_dt=ref_dt, threads=threads)
        reports.append(rep)
    for dt in dt_list:
        n = _n_steps(T, dt)
        inc = generate_increments(master_seed, range(n_paths), n, dt)
        for rep in reports:
            wall = _time_stepping(params, rep.scheme, I0, inc, dt, repeats)
            err = rep.errors[rep.step_sizes.index(float(dt))]
            rows.append(BenchRow(rep.scheme, float(dt), err, wall, n, wall / (n * n_paths)))
    return BenchReport(tuple(reports), tuple(rows), int(n_paths), int(master_seed), int(repeats))
