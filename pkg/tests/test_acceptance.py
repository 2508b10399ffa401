"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import itertools
import math
import time

import numpy as np
import pytest
from scipy import integrate, stats

from modecenter import data, kernels as K, sim, testbeds as T
from modecenter.estimators import IrwConfig, TrimConfig, irw, kme_fixed, kme_tuned, sample_mean, sample_median, trimmed_mean
from modecenter.stats import wilcoxon_one_sided
from modecenter.tuner import TunerConfig, optimize_params
from modecenter.variance import asymptotic_variance_bump, variance_curve

TABLE1_FINAL = np.array([0.193, 0.203, 0.207, 0.203, 0.193, 0.0, 0.0])
T_OPTIMA = {1: (9.69e-2, 30.4), 2: (1.57e-1, 21.6), 3: (2.23e-1, 17.3), 4: (2.91e-1, 14.9), 5: (3.60e-1, 13.3)}


def test_1_synthetic_example(acceptance_log):
    x = np.array(data.SYNTHETIC_EXAMPLE)
    t0 = time.perf_counter()
    est, params, _ = kme_tuned(x)
    _, trace = kme_fixed(x, 1.765101, 9.199545, IrwConfig(epsilon=1e-8))
    elapsed = time.perf_counter() - t0
    werr = float(np.max(np.abs(trace.weights_final - TABLE1_FINAL)))
    ok = (abs(est) <= 0.05 and trace.converged and 4 <= trace.iterations <= 12
          and werr <= 0.003 and elapsed < 1.0)
    acceptance_log(1, ok, f"estimate {est:.2e}, forced-parameter IRW {trace.iterations} iterations, "
                          f"max weight error {werr:.1e}, {elapsed:.2f}s")
    assert ok


def test_2_newcomb(acceptance_log):
    x = data.newcomb()
    t0 = time.perf_counter()
    est, params, trace = kme_tuned(x)
    tm = trimmed_mean(x, TrimConfig(2 / 66))
    elapsed = time.perf_counter() - t0
    w = trace.weights_final
    out_w = w[x < 0]
    in_w = w[x > 0]
    ok = (abs(est - 27.75) <= 0.1 and np.all(out_w == 0)
          and np.ptp(in_w) <= 1e-6 and abs(in_w.sum() - 1) <= 1e-6
          and abs(tm - 27.37) <= 0.01 and abs(sample_mean(x) - 26.2) <= 0.05
          and sample_median(x) == 27 and elapsed < 5.0)
    acceptance_log(2, ok, f"estimate {est:.4f} at (beta, h) = ({params.beta:.4g}, {params.h:.4g}), "
                          f"inlier weight {in_w[0]:.6f}, trimmed mean {tm:.4f}, {elapsed:.2f}s")
    assert ok


def test_3_variance_limits(acceptance_log):
    t0 = time.perf_counter()
    ratios = {}
    for tb in T.TESTBED_IDS:
        s2 = T.info(tb).sigma2
        if math.isfinite(s2):
            ratios[tb] = asymptotic_variance_bump(tb, 8, 1e3) / s2
    p = K.normalize(K.KernelShape.bump(8))
    r_kprime = 2 * integrate.quad(lambda u: p.deriv(u) ** 2, 0, 1, limit=400, epsabs=1e-14)[0]
    f0 = stats.norm.pdf(0)
    sigma_m2 = f0 * r_kprime / f0 ** 2  # the normal has f0''(0) = -f0(0)
    small = asymptotic_variance_bump("normal", 8, 1e-2) * 1e-6
    elapsed = time.perf_counter() - t0
    worst = max(abs(r - 1) for r in ratios.values())
    rel = abs(small / sigma_m2 - 1)
    ok = worst < 0.02 and rel < 0.1 and elapsed < 30
    acceptance_log(3, ok, f"max |V(1e3)/sigma2 - 1| = {worst:.2e}, small-h ratio error {rel:.2e}, {elapsed:.2f}s")
    assert ok


def test_4_minimizer_existence(acceptance_log):
    t0 = time.perf_counter()
    details, ok = [], True
    for nu in (3, 4, 5):
        c = variance_curve(f"student_t_{nu}", 0.25, 0.5, 1e3, 200)
        interior = c.h_grid[0] < c.argmin_h < c.h_grid[-1]
        ok &= interior and c.min_value < c.sigma2_ref
        details.append(f"t{nu}: h*={c.argmin_h:.3g} V={c.min_value:.4g}")
    for beta in (0.25, 1.0, 8.0):
        c = variance_curve("normal", beta, 0.5, 1e3, 200)
        ok &= c.argmin_h == c.h_grid[-1]
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    acceptance_log(4, ok, "; ".join(details) + f"; normal argmin at grid end; {elapsed:.1f}s")
    assert ok


def test_5_simulation_desk_scale(acceptance_log):
    cfg = sim.SimConfig(
        testbeds=("student_t_1", "student_t_3", "outlier", "laplace", "normal"),
        sample_sizes=(100, 1000), replications=200, bootstrap_b=100, master_seed=0,
    )
    t0 = time.perf_counter()
    table = sim.run(cfg)
    elapsed = time.perf_counter() - t0

    def ratio(tb, n, other):
        return table.row(tb, n, other).comparison.mse_ratio

    checks = {
        "a": (ratio("student_t_1", 100, "median") < 1 and ratio("student_t_1", 1000, "median") < 1,
              f"t1/median {ratio('student_t_1', 100, 'median'):.3f},{ratio('student_t_1', 1000, 'median'):.3f}"),
        "b": (ratio("student_t_1", 1000, "mean") < 0.01, f"t1/mean {ratio('student_t_1', 1000, 'mean'):.2e}"),
        "c": (0.35 <= ratio("student_t_3", 1000, "mean") <= 0.75, f"t3/mean {ratio('student_t_3', 1000, 'mean'):.3f}"),
        "d": (0.40 <= ratio("outlier", 1000, "median") <= 0.80, f"outlier/median {ratio('outlier', 1000, 'median'):.3f}"),
        "e": (0.40 <= ratio("laplace", 1000, "mean") <= 0.80, f"laplace/mean {ratio('laplace', 1000, 'mean'):.3f}"),
        "f": (0.85 <= ratio("normal", 100, "mean") <= 1.8, f"normal/mean {ratio('normal', 100, 'mean'):.3f}"),
    }
    ok = all(c[0] for c in checks.values()) and elapsed < 1800
    failed = [k for k, c in checks.items() if not c[0]]
    acceptance_log(5, ok, ", ".join(f"({k}) {c[1]}" for k, c in checks.items())
                   + f"; {elapsed:.0f}s" + (f"; failed {failed}" if failed else ""))
    assert ok


def test_6_tuner_vs_table(acceptance_log):
    details, ok = [], True
    for nu, (b, h) in T_OPTIMA.items():
        tb = T.get(f"student_t_{nu}")
        f0 = tb.centered_pdf()
        h0 = stats.t(nu).ppf(0.75) / 0.6745  # population MADN
        res = optimize_params(f0, config=TunerConfig(h0=h0))
        ref = asymptotic_variance_bump(f0, b, h)
        ratio = res.achieved_variance / ref
        ok &= ratio <= 1.02
        details.append(f"t{nu} {ratio:.6f}")
    acceptance_log(6, ok, "achieved / table-optimum variance: " + ", ".join(details))
    assert ok


def _brute_force_p(a, b):
    d = b - a
    d = d[d != 0]
    if d.size == 0:
        return 1.0
    r = stats.rankdata(np.abs(d))
    obs = r[d > 0].sum()
    return sum(np.dot(s, r) >= obs - 1e-9 for s in itertools.product([0, 1], repeat=d.size)) / 2 ** d.size


def _window_fixed_points(x, h):
    found = []
    for mask in itertools.product([False, True], repeat=x.size):
        m = np.array(mask)
        if m.any():
            c = x[m].mean()
            if np.array_equal(np.abs(x - c) < h, m):
                found.append(c)
    return found


def test_7_oracle_equivalences(acceptance_log):
    rng = np.random.default_rng(7)
    wil_ok = 0
    for _ in range(100):
        m = int(rng.integers(1, 11))
        a = rng.integers(0, 8, m).astype(float)
        b = rng.integers(0, 8, m).astype(float)
        wil_ok += wilcoxon_one_sided(a, b) == _brute_force_p(a, b)
    irw_ok = isolated = 0
    for _ in range(50):
        n = int(rng.integers(2, 13))
        x = np.round(rng.normal(0, 3, n), 4)
        h = float(rng.uniform(0.5, 5))
        est, trace = irw(x, lambda d: (np.abs(d) < h).astype(float), h, IrwConfig(epsilon=1e-12))
        if trace.isolated:
            # empty window: the update map leaves the point where it is
            isolated += 1
            irw_ok += bool(np.all(np.abs(x - est) >= h))
            continue
        fixed = _window_fixed_points(x, h)
        irw_ok += trace.converged and any(abs(est - c) <= 1e-9 for c in fixed)
    ok = wil_ok == 100 and irw_ok == 50
    acceptance_log(7, ok, f"Wilcoxon exact {wil_ok}/100, flat-window IRW {irw_ok}/50 "
                          f"({isolated} with an empty starting window)")
    assert ok


def test_8_invariant_suites(acceptance_log):
    failures = []

    # kernels: unit mass, derivative consistency, bell shape
    for beta in (0.25, 1.0, 2.0, 8.0, 100.0):
        p = K.normalize(K.KernelShape.bump(beta))
        if abs(2 * integrate.quad(p.eval, 0, 1, limit=400, epsabs=1e-13)[0] - 1) > 1e-8:
            failures.append(f"mass beta={beta}")
        u = np.linspace(-0.98, 0.98, 99)
        fd = (p.eval(u + 1e-5) - p.eval(u - 1e-5)) / 2e-5
        if np.max(np.abs(fd - p.deriv(u))) > 1e-6:
            failures.append(f"derivative beta={beta}")
        a = K.inflection_point(beta)
        if np.any(p.second_deriv(np.linspace(1e-3, a - 1e-6, 100)) > 0) or \
                np.any(p.second_deriv(np.linspace(a + 1e-6, 1 - 1e-6, 100)) < 0):
            failures.append(f"bell shape beta={beta}")

    # unbiasedness at fixed (beta, h) = (1, 1)
    rng = np.random.default_rng(123)
    est = np.array([kme_fixed(rng.standard_normal(50), 1.0, 1.0)[0] for _ in range(2000)])
    if abs(est.mean()) >= 3 * est.std(ddof=1) / math.sqrt(est.size):
        failures.append("unbiasedness")

    # translation and scale equivariance of the tuned pipeline
    for x in (data.newcomb(), T.sample("student_t_3", 150, 8)):
        base, _, _ = kme_tuned(x)
        if abs(kme_tuned(x + 13.0)[0] - (base + 13.0)) > 1e-6:
            failures.append("translation")
        for s in (0.1, 10.0):
            if abs(kme_tuned(s * x)[0] - s * base) > 1e-6 * max(1.0, abs(s * base)):
                failures.append(f"scale {s}")

    # simulation determinism under parallelism
    cfg = dict(testbeds=("normal", "student_t_1"), sample_sizes=(40,), replications=30,
               estimators=("kme", "mean", "median", "trimmed-adaptive"), bootstrap_b=50)
    one = sim.run(sim.SimConfig(parallelism=1, **cfg)).as_dict()
    two = sim.run(sim.SimConfig(parallelism=2, **cfg)).as_dict()
    if one != two:
        failures.append("sim determinism")

    ok = not failures
    acceptance_log(8, ok, "kernels, unbiasedness, equivariance, sim determinism"
                   + ("" if ok else f"; failed: {failures}"))
    assert ok
