"""Acceptance suite: one test per criterion, each printing a single
``[PASS]`` or ``[FAIL]`` line before asserting."""

import math
import subprocess
import sys
import time
import warnings
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
import pytest
from scipy.stats import ks_2samp, norm

from lognsum import (LognormalModel, acceptance_prob_gamma, asymptotic_lemma_check, cdf_approx,
                     cdf_is_estimate, density_approx, efficiency_diagnostic,
                     laplace_power_estimate, log_laplace_k, naive_estimate, pdf_is_estimate,
                     sample_gamma_ar, sample_naive, theta_solve, theta_tilde, tilted_mean_exact)
from lognsum.laplace import log_laplace_asymptotic
from lognsum.montecarlo import DegenerateSampleWarning
from lognsum.saddlepoint import B6_DIVISOR, TABLE_B6_DIVISOR

from oracles import conv2_cdf, conv2_pdf, log_laplace_direct

M25 = LognormalModel(0.25)
R = 10 ** 5


@pytest.fixture
def report(capsys):
    def emit(number, title, checks):
        ok = all(c for _, c in checks)
        detail = "; ".join(f"{label}: {'ok' if c else 'FAILED'}" for label, c in checks)
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})")
        assert ok, detail
    return emit


# (x, E at theta_tilde, theta_tilde, theta)
T1 = [
    (1.0, 0.99905160, 0.5002255, 0.4850103),
    (0.9, 0.89695877, 2.4295388, 2.3625893),
    (0.8, 0.79589537, 5.0894397, 4.9624633),
    (0.7, 0.69554784, 8.8690980, 8.6691868),
    (0.5, 0.49617443, 23.1845282, 22.7639315),
    (0.3, 0.29767635, 65.8850274, 64.9626105),
    (0.1, 0.09934273, 373.4301331, 369.9235664),
]

# n, x, Saddle0, Saddle1
SADDLE_TABLES = [
    (4, 0.65, 0.0001536084, 0.0001592339),
    (4, 0.70, 0.0012499087, 0.0013015022),
    (4, 0.75, 0.0065782847, 0.0068830734),
    (4, 0.80, 0.0242679549, 0.0255206432),
    (4, 0.85, 0.0669477011, 0.0707464921),
    (4, 0.90, 0.1456850237, 0.1545557418),
    (64, 0.90, 8.693420e-06, 8.772302e-06),
    (64, 0.91, 3.951385e-05, 3.989503e-05),
    (64, 0.92, 1.575592e-04, 1.591772e-04),
    (64, 0.93, 5.538798e-04, 5.599406e-04),
    (64, 0.95, 4.782814e-03, 4.842303e-03),
    (64, 0.97, 2.646345e-02, 2.683567e-02),
    (64, 0.99, 9.774927e-02, 9.926919e-02),
]

# sigma, n, nx, printed half-width (nan where the table prints NaN)
MC_TABLES = [
    (0.25, 4, 2.60, 1.83e-06), (0.25, 4, 2.80, 1.37e-05), (0.25, 4, 3.00, 6.66e-05),
    (0.25, 4, 3.20, 2.24e-04), (0.25, 4, 3.40, 5.61e-04), (0.25, 4, 3.60, 1.10e-03),
    (0.25, 64, 59.00, 2.56e-06), (0.25, 64, 59.75, 1.01e-05), (0.25, 64, 60.50, 3.35e-05),
    (0.25, 64, 61.25, 9.43e-05), (0.25, 64, 62.00, 2.30e-04), (0.25, 64, 62.75, 4.79e-04),
    (0.25, 256, 249.0, 1.38e-06), (0.25, 256, 251.0, 8.16e-06), (0.25, 256, 252.0, 1.82e-05),
    (0.25, 256, 253.0, 3.79e-05), (0.25, 256, 254.0, 7.41e-05), (0.25, 256, 256.0, 2.37e-04),
    (0.125, 64, 60.8, 1.08e-06), (0.125, 64, 61.2, 4.97e-06), (0.125, 64, 61.6, 1.90e-05),
    (0.125, 64, 62.0, 6.15e-05), (0.125, 64, 62.4, 1.71e-04), (0.125, 64, 62.8, 3.94e-04),
    (0.072, 64, 62.1, math.nan), (0.072, 64, 62.3, math.nan), (0.072, 64, 62.5, 1.98e-05),
    (0.072, 64, 62.7, 5.51e-05), (0.072, 64, 62.9, 1.34e-04), (0.072, 64, 63.1, 2.92e-04),
]

# x, Saddle/MC, MC/MC value, MC/MC half-width  (n = 4, sigma = 0.25)
PDF_N4 = [
    (0.65, 1.90e-03, 1.88e-03, 8.66e-06),
    (0.70, 1.23e-02, 1.22e-02, 5.62e-05),
    (0.75, 5.15e-02, 5.08e-02, 2.36e-04),
    (0.80, 1.49e-01, 1.47e-01, 6.85e-04),
    (0.85, 3.16e-01, 3.16e-01, 1.47e-03),
    (0.90, 5.25e-01, 5.24e-01, 2.46e-03),
]

# nx, L~^n, product value, product half-width  (n = 256, sigma = 0.25)
LAPLACE_N256 = [
    (249.0, 1.23e-108, 1.12e-108, 4.92e-111),
    (250.0, 4.10e-101, 3.75e-101, 1.53e-103),
    (251.0, 1.20e-93, 1.10e-93, 4.11e-96),
    (252.0, 3.08e-86, 2.87e-86, 9.84e-89),
    (253.0, 6.95e-79, 6.49e-79, 2.02e-81),
    (254.0, 1.38e-71, 1.29e-71, 3.63e-74),
    (255.0, 2.40e-64, 2.26e-64, 5.71e-67),
    (256.0, 3.69e-57, 3.49e-57, 7.83e-60),
]


def _round_half(v):
    """Half a unit in the last printed digit of a 3-significant-figure value."""
    return 0.005 * 10.0 ** math.floor(math.log10(abs(v)))


def _sig(v, digits):
    # decimal rounding of the shortest repr, so 6.95e-79 rounds up like it prints
    d = Decimal(repr(v))
    q = Decimal(1).scaleb(d.adjusted() - digits + 1)
    return d.quantize(q, rounding=ROUND_HALF_UP)


def test_criterion_01_cramer_table(report):
    start = time.perf_counter()
    tt_ok = th_ok = it_ok = mean_ok = True
    for x, mean, tt, th in T1:
        sol = theta_solve(M25, x)
        tt_ok &= round(sol.theta_tilde, 7) == tt
        th_ok &= abs(sol.theta / th - 1) <= 1e-6
        it_ok &= sol.iterations <= 4
        mean_ok &= abs(tilted_mean_exact(M25, sol.theta_tilde) - mean) < 5e-7
    elapsed = time.perf_counter() - start
    report(1, "initial and refined saddlepoints", [
        ("theta~ to 7 decimals", tt_ok), ("theta to 1e-6", th_ok),
        ("<= 4 Newton steps", it_ok), ("tilted mean to 6 decimals", mean_ok),
        (f"runtime {elapsed:.2f}s < 1s", elapsed < 1.0)])


def test_criterion_02_saddlepoint_cdf_tables(report):
    start = time.perf_counter()
    worst0 = worst1 = worst72 = 0.0
    for n, x, s0, s1 in SADDLE_TABLES:
        worst0 = max(worst0, abs(cdf_approx(M25, n, x, 1) / s0 - 1))
        worst1 = max(worst1, abs(cdf_approx(M25, n, x, 2, b6_divisor=TABLE_B6_DIVISOR) / s1 - 1))
        worst72 = max(worst72, abs(cdf_approx(M25, n, x, 2, b6_divisor=B6_DIVISOR) / s1 - 1))
    elapsed = time.perf_counter() - start
    report(2, "saddlepoint CDF tables", [
        (f"Saddle0 worst rel {worst0:.1e}", worst0 <= 1e-5),
        (f"Saddle1 (divisor {TABLE_B6_DIVISOR:g}) worst rel {worst1:.1e}", worst1 <= 1e-5),
        (f"runtime {elapsed:.2f}s < 5s", elapsed < 5.0)])
    # informational: the default divisor is the one the convolution oracle favours
    print(f"    default divisor {B6_DIVISOR:g}: worst rel deviation from Saddle1 {worst72:.1e}")


def test_criterion_03_mc_saddlepoint_agreement(report):
    contain_fail, ratio_fail, ratios = [], [], []
    for sigma, n, nx, phw in MC_TABLES:
        m = LognormalModel(sigma)
        x = nx / n
        est = cdf_is_estimate(m, n, x, R, seed=0)
        s = cdf_approx(m, n, x, 2)
        lo, hi = est.value - est.half_width, est.value + est.half_width
        if hi < 0.92 * s or lo > 1.08 * s:
            contain_fail.append((sigma, n, nx))
        if not math.isnan(phw):
            ratio = est.half_width / phw
            ratios.append(ratio)
            if not 0.3 <= ratio <= 3.0:
                ratio_fail.append((sigma, n, nx))
    report(3, "IS estimates against order-2 saddlepoint", [
        (f"CI within 8% on {len(MC_TABLES) - len(contain_fail)}/{len(MC_TABLES)} rows",
         not contain_fail),
        (f"half-width ratio in [{min(ratios):.2f}, {max(ratios):.2f}] on {len(ratios)} rows",
         not ratio_fail)])


def test_criterion_04_pdf_estimators(report):
    overlap_fail, saddle_fail = [], []
    for x, sad, val, hw in PDF_N4:
        est = pdf_is_estimate(M25, 4, x, R, "B", seed=0)
        if abs(est.value - val) > est.half_width + 3 * hw:
            overlap_fail.append(x)
        if abs(density_approx(M25, 4, x, 1) / sad - 1) >= 0.08:
            saddle_fail.append(x)
    report(4, "PDF n=4 table", [
        (f"CI overlap on {len(PDF_N4) - len(overlap_fail)}/{len(PDF_N4)} rows", not overlap_fail),
        (f"saddlepoint within 8% on {len(PDF_N4) - len(saddle_fail)}/{len(PDF_N4)} rows",
         not saddle_fail)])


def test_criterion_05_laplace_stack(report):
    worst = 0.0
    for sigma in (0.072, 0.25, 1.0):
        m = LognormalModel(sigma)
        for theta in np.logspace(-2, 6, 17):
            for k in range(5):
                d = log_laplace_k(m, float(theta), k) - log_laplace_direct(sigma, float(theta), k)
                worst = max(worst, abs(math.expm1(d)))
    lt_ok = prod_ok = True
    for nx, lt, pv, phw in LAPLACE_N256:
        th = theta_tilde(M25, nx / 256)
        got = math.exp(256 * log_laplace_asymptotic(M25, th, with_root=True))
        lt_ok &= _sig(got, 2) == _sig(lt, 2)
        est = laplace_power_estimate(M25, th, 256, R, "product", 7)
        prod_ok &= abs(est.value - pv) <= est.half_width + phw + _round_half(pv)
    report(5, "Laplace transform stack", [
        (f"quadrature vs oracle worst rel {worst:.1e} <= 1e-9", worst <= 1e-9),
        ("L~^n to 2 significant figures", lt_ok),
        ("product estimator CI overlap", prod_ok)])


def test_criterion_06_exact_oracles(report):
    n1_is = n1_sad = True
    for x in (0.5, 0.7):
        exact = norm.cdf(math.log(x) / 0.25)
        n1_is &= cdf_is_estimate(M25, 1, x, R, seed=2).contains(exact, 3)
        n1_sad &= abs(cdf_approx(M25, 1, x, 2) / exact - 1) < 0.05
    x = 0.7
    pdf = pdf_is_estimate(M25, 2, x, R, "B", seed=5).contains(conv2_pdf(0.25, 2 * x), 3)
    cdf = cdf_is_estimate(M25, 2, x, R, seed=5).contains(conv2_cdf(0.25, 2 * x), 3)
    report(6, "exact n=1 and convolution n=2 oracles", [
        ("n=1 IS within 3 CI", n1_is), ("n=1 saddlepoint within 5%", n1_sad),
        ("n=2 pdf within 3 CI", pdf), ("n=2 cdf within 3 CI", cdf)])


def test_criterion_07_samplers(report):
    a, _ = sample_gamma_ar(M25, 25.0, 10, R)
    b, _ = sample_naive(M25, 25.0, 11, R)
    p_ks = ks_2samp(a, b).pvalue
    formula_ok = True
    for theta in (1.0, 25.0, 100.0):
        _, rep = sample_gamma_ar(M25, theta, 8, 3 * R)
        p = acceptance_prob_gamma(M25, theta)
        formula_ok &= abs(rep.empirical_acceptance - p) < 3 * math.sqrt(p * (1 - p) / rep.proposals_used)
    _, rep100 = sample_gamma_ar(M25, 100.0, 7, R)
    low = acceptance_prob_gamma(M25, 0.01)
    report(7, "sampler exactness and acceptance", [
        (f"KS p = {p_ks:.3f} > 0.01", p_ks > 0.01),
        ("acceptance matches formula at theta 1, 25, 100", formula_ok),
        (f"acceptance {rep100.empirical_acceptance:.3f} > 0.95 at theta=100",
         rep100.empirical_acceptance > 0.95),
        (f"acceptance {low:.3f} < 0.2 at theta=0.01", low < 0.2)])


def test_criterion_08_lemma_suite(report):
    u = np.logspace(-3, -12, 10)
    r = asymptotic_lemma_check(M25, u)
    growth = [abs(v[-1] / v[0]) for v in (r.limit1, r.limit2, r.limit3)]
    shrink = bool(np.all(np.diff(np.abs(r.gamma_minus_log)) < 0))
    exact = asymptotic_lemma_check(M25, u, constants="exact")
    exact_growth = [abs(v[-1] / v[0]) for v in (exact.limit1, exact.limit2, exact.limit3)]
    report(8, "asymptotic lemma residuals", [
        (f"scaled residual growth {', '.join(f'{g:.1f}x' for g in growth)} stays below 2x",
         max(growth) < 2.0),
        ("gamma(u) - |log u| shrinks", shrink)])
    print("    with the exact constants: growth "
          + ", ".join(f"{g:.2f}x" for g in exact_growth))


def test_criterion_09_efficiency(report):
    Rd = 5 * 10 ** 4
    xs = np.linspace(0.65, 0.30, 8)
    d = efficiency_diagnostic(M25, 4, xs, Rd, epsilon=0.2, seed=3)
    r = d.mse_ratio
    rise = max(r[j] / r[i] for i in range(r.size) for j in range(i + 1, r.size))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSampleWarning)
        crude = naive_estimate(M25, 4, xs[-1], Rd, seed=3)
    a = d.alpha[-1]
    crude_rel = 1.96 * math.sqrt((1 - a) / (Rd * a))
    report(9, "logarithmic efficiency proxy", [
        (f"worst MSE/alpha^1.8 rise {rise:.2f}x <= 10x", rise <= 10),
        (f"crude relative error {crude_rel:.1e} > 10x IS {d.rel_err[-1]:.1e}",
         (crude.degenerate or crude.rel_err > 10 * d.rel_err[-1])
         and crude_rel > 10 * d.rel_err[-1])])


def _cli(*argv):
    res = subprocess.run([sys.executable, "-m", "lognsum", *argv], capture_output=True, text=True)
    return res.returncode, res.stdout, res.stderr


def test_criterion_10_determinism(report):
    cdf = ("cdf", "--sigma", "0.25", "--n", "4", "--x", "0.7", "--method", "mc",
           "--R", "20000", "--seed", "5", "--format", "json")
    pdf = ("pdf", "--sigma", "0.25", "--n", "64", "--x", "0.95", "--method", "mc",
           "--R", "10000", "--seed", "2", "--format", "csv")
    smp = ("sample", "--sigma", "0.25", "--theta", "25", "--count", "200", "--seed", "3")
    lap = ("laplace", "--sigma", "0.25", "--theta", "5", "--is", "10000", "--seed", "4")
    repeat = all(_cli(*c) == _cli(*c) for c in (cdf, pdf, smp, lap))
    workers = all(_cli(*c, "--workers", "1") == _cli(*c, "--workers", "3") for c in (cdf, pdf))
    report(10, "determinism", [
        ("repeated runs byte-identical", repeat),
        ("worker count changes nothing", workers)])
