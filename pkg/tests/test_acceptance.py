"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""
import sys
import time

import numpy as np
import pytest

from sislab import analysis, cli, model, noise, schemes
from sislab.analysis import ReferenceMode
from sislab.model import SISParams
from sislab.schemes import SchemeKind

P_STAR = SISParams(beta=0.5, gamma=0.2, b=0.05, K=1.0, sigma=0.1)
P_DAGGER = SISParams(beta=0.25, gamma=0.2, b=0.05, K=1.0, sigma=0.1)
I0, T = 0.5, 1.0
CHAIN = [T * 2.0 ** -k for k in range(6, 11)]
REF_DT = T * 2.0 ** -13

RESULTS: list[str] = []


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


pytestmark = pytest.mark.slow


def test_1_domain_preservation():
    t0 = time.perf_counter()
    bad = 0
    for dt in (1e-1, 1e-2, 1e-3):
        n = round(T / dt)
        for start in range(0, 1000, 250):
            inc = noise.generate_increments(1, range(start, start + 250), n, dt)
            for s in (SchemeKind.GRAY_YANG, SchemeKind.SEMI_DISCRETE):
                res = schemes.simulate_batch(P_STAR, s, I0, inc, dt)
                I = res.states_I
                bad += int(np.count_nonzero(~((I > 0) & (I < P_STAR.K)))) + int(res.failed.sum())
    elapsed = time.perf_counter() - t0
    record(1, bad == 0 and elapsed < 60,
           f"{bad} GY/SD nodes outside (0, K) over 1000 paths x 3 step sizes ({elapsed:.1f}s)")


def test_2_strong_order_self_reference():
    rep = analysis.strong_error(P_STAR, "sd", I0, T, CHAIN, 1000, ReferenceMode.SELF_FINEST,
                                master_seed=2, q=1, ref_dt=REF_DT, threads=0)
    record(2, 0.8 <= rep.fitted_order <= 1.2,
           f"SD self-reference fitted slope {rep.fitted_order:.4f} (need [0.8, 1.2])")


def test_3_cross_scheme_order():
    rep = analysis.strong_error(P_STAR, "sd", I0, T, CHAIN, 1000, ReferenceMode.CROSS_SCHEME,
                                master_seed=3, q=1, threads=0)
    errs = ", ".join(f"{e:.2e}" for e in rep.errors)
    record(3, rep.fitted_order >= 0.8,
           f"SD vs GY fitted slope {rep.fitted_order:.4f} (need >= 0.8); errors {errs}")


def test_4_extinction():
    cond = model.extinction_conditions(P_DAGGER)
    rep = analysis.stability_experiment(P_DAGGER, I0, 200.0, 0.01, 500, master_seed=4, threads=0)
    bound = P_DAGGER.eta - 0.5 * P_DAGGER.sigma_K ** 2
    exps = rep.per_path_exponents
    frac_exp = float(np.mean(exps <= bound + 0.05))
    frac_term = float(np.mean(rep.terminal_I <= 1e-6 * P_DAGGER.K))
    ok = cond.all_satisfied and frac_exp >= 0.95 and frac_term >= 0.95
    record(4, ok, f"conditions {cond.all_satisfied}; {frac_exp:.1%} exponents <= {bound + 0.05:.3f}; "
                  f"{frac_term:.1%} terminal values <= 1e-6 K "
                  f"(median terminal {np.median(rep.terminal_I):.3e})")


def test_5_moment_envelope():
    rep = analysis.moment_check(P_STAR, I0, T, 0.01, 10_000, [1, 2, 4], master_seed=5, threads=0)
    rows = [r for r in rep.rows if r.kind == "scheme"]
    ok = len(rows) == 3 and all(r.empirical <= r.bound for r in rows)
    detail = "; ".join(f"p={r.p:g}: {r.empirical:.5f} <= {r.bound:.5f}" for r in rows)
    record(5, ok, detail)


def test_6_em_domain_failure():
    p = P_STAR.replace(sigma=1.0)
    rep = analysis.domain_violation_census(p, 0.9, 10.0, [0.1], 1000, master_seed=6, threads=0)
    em, gy, sd = (rep.fraction(s, 0.1) for s in ("em", "gy", "sd"))
    record(6, em > 0.01 and gy == 0 and sd == 0,
           f"EM violation fraction {em:.1%} (need > 1%); GY {gy}, SD {sd}")


def _logistic(p, x0, t):
    c = p.eta * p.K / p.beta
    return c / (1 + (c / x0 - 1) * np.exp(-p.eta * t))


def _sd_sup_error(p, x0, dt):
    n = round(T / dt)
    tr = schemes.simulate(p, "sd", x0, noise.WienerGrid(dt, np.zeros(n)))
    return float(np.max(np.abs(tr.states_I - _logistic(p, x0, tr.times))))


def test_7_deterministic_oracle():
    p = P_STAR.replace(sigma=0.0)
    err_fine = _sd_sup_error(p, I0, 1e-3)
    hs = [T * 2.0 ** -k for k in range(4, 9)]
    errs = [_sd_sup_error(p, I0, h) for h in hs]
    slope = analysis.fit_order(hs, errs)[0]
    ok = err_fine <= 0.5e-3 and 0.9 <= slope <= 1.1
    record(7, ok, f"max error {err_fine:.3e} at dt=1e-3 (need <= 5e-4); fitted order {slope:.4f} "
                  f"(need [0.9, 1.1]); errors {', '.join(f'{e:.1e}' for e in errs)}")


REPRO_RUNS = [
    ["simulate", "--I0", "0.5", "--T", "1", "--dt", "0.001", "--scheme", "sd"],
    ["convergence", "--I0", "0.5", "--dt-list", "0.0625,0.03125,0.015625", "--paths", "300"],
    ["convergence", "--I0", "0.5", "--dt-list", "0.0625,0.03125,0.015625", "--paths", "300",
     "--reference", "gy", "--q", "2"],
    ["compare", "--I0", "0.5", "--dt-list", "0.01,0.005", "--paths", "300"],
    ["stability", "--I0", "0.5", "--T", "20", "--dt", "0.01", "--paths", "300",
     "--beta", "0.25"],
    ["moments", "--I0", "0.5", "--dt", "0.01", "--paths", "300"],
    ["violations", "--I0", "0.9", "--sigma", "1", "--T", "10", "--dt-list", "0.1,0.05",
     "--paths", "300"],
    ["bench", "--I0", "0.5", "--dt-list", "0.0625,0.03125,0.015625", "--paths", "200"],
]
PSTAR_FLAGS = ["--beta", "0.5", "--gamma", "0.2", "--b", "0.05", "--K", "1", "--sigma", "0.1"]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_8_reproducibility(tmp_path, capsys):
    mismatched = []
    for i, argv in enumerate(REPRO_RUNS):
        outputs = []
        for tag, threads in (("a", 1), ("b", 1), ("c", 8)):
            out = tmp_path / f"{i}{tag}"
            args = [argv[0], *PSTAR_FLAGS, *argv[1:], "--seed", "8", "--threads", str(threads),
                    "--out", str(out)]
            assert cli.main(args) == 0
            files = sorted(f for f in out.glob("*.csv") if f.name != "bench_timing.csv")
            outputs.append({f.name: f.read_bytes() for f in files})
        if not (outputs[0] == outputs[1] == outputs[2]) or not outputs[0]:
            mismatched.append(argv[0])
    capsys.readouterr()
    record(8, not mismatched,
           f"{len(REPRO_RUNS)} CLI runs at threads 1, 1, 8; mismatches: {mismatched or 'none'}")


def test_9_benchmark_sanity():
    rep = analysis.bench_error_vs_time(P_STAR, I0, T, CHAIN, 1000, master_seed=9, repeats=3,
                                       ref_dt=REF_DT, threads=0)
    problems = []
    for s in (SchemeKind.GRAY_YANG, SchemeKind.SEMI_DISCRETE):
        rows = sorted((r for r in rep.rows if r.scheme is s), key=lambda r: -r.dt)
        errs = [r.error for r in rows]
        walls = [r.wall_seconds for r in rows]
        if any(b >= a for a, b in zip(errs, errs[1:])):
            problems.append(f"{s.value} error not decreasing")
        if any(b <= a for a, b in zip(walls, walls[1:])):
            problems.append(f"{s.value} time not increasing")
    cost = {s: np.median([r.per_step_seconds for r in rep.rows if r.scheme is s])
            for s in (SchemeKind.GRAY_YANG, SchemeKind.SEMI_DISCRETE)}
    ratio = cost[SchemeKind.SEMI_DISCRETE] / cost[SchemeKind.GRAY_YANG]
    if not ratio <= 2.0:
        problems.append("SD per-step cost above 2x GY")
    record(9, not problems, f"SD/GY per-step cost ratio {ratio:.2f}; {'; '.join(problems) or 'monotone'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
