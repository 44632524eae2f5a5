"""One test per acceptance criterion; each reports a single PASS/FAIL line.

The lines are printed as the tests run and collected again in the
terminal summary under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_vectors
from poisbin.cli import main
from poisbin.distributions import BernoulliVector, pmf_bruteforce, poisson_binomial_pmf_dft, poisson_binomial_pmf_dp
from poisbin.divergences import DEFAULT_ALPHAS, TruncationPolicy, evaluate
from poisbin.harness import (
    FamilySpec,
    bv_limit_check,
    convolution_pairs,
    default_corpus,
    degenerate_asymptotics_check,
    run_sweep,
    saddle_checks,
)
from poisbin.precision import PrecisionPolicy
from poisbin.saddle import contour_pmf_full


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


@pytest.fixture(scope="module")
def corpus():
    return run_sweep(default_corpus())


def _checks(records, *names):
    out = [c for r in records for c in r.checks if c.name in names]
    return [c for c in out if c.applicable]


def _summary(checks):
    bad = [c for c in checks if not c.holds]
    return len(checks), len(bad)


def test_corpus_has_no_errors(corpus):
    assert not [r.error for r in corpus if r.error]
    assert {r.family.kind for r in corpus} >= {"equal", "two-block", "all-ones", "random-seeded"}


def test_criterion_01_dp_matches_enumeration():
    start = time.perf_counter()
    worst = 0.0
    vectors = random_vectors(100, 15, seed=101)
    for p in vectors:
        dp = poisson_binomial_pmf_dp(p).probabilities()
        brute = pmf_bruteforce(p).probabilities()
        worst = max(worst, float(np.max(np.abs(dp - brute))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-13 and elapsed < 10
    assert report(1, ok, f"100 instances, max abs error {worst:.3g}, {elapsed:.2f} s")


CROSS_METHOD_INSTANCES = [(1, 0.5), (16, 0.5), (256, 0.5), (256, 0.05), (1024, 0.5), (1024, 0.01),
                          (4096, 0.5), (4096, 0.01)]


def test_criterion_02_cross_method():
    start = time.perf_counter()
    # radius-1 inversion needs digits below the smallest retained entry
    policy = PrecisionPolicy.high(280)
    floor = math.log(1e-250)
    worst_dft = worst_contour = 0.0
    compared = 0
    for n, x in CROSS_METHOD_INSTANCES:
        p = BernoulliVector.equal(n, x)
        dp = poisson_binomial_pmf_dp(p).log_mass
        nodes = 1 << n.bit_length()
        dft = poisson_binomial_pmf_dft(p, 1.0, nodes, policy).log_mass[: n + 1]
        contour = contour_pmf_full(p).log_mass
        keep = dp >= floor
        compared += int(keep.sum())
        worst_dft = max(worst_dft, float(np.max(np.abs(np.expm1(dft[keep] - dp[keep])))))
        worst_contour = max(worst_contour, float(np.max(np.abs(np.expm1(contour[keep] - dp[keep])))))
    elapsed = time.perf_counter() - start
    ok = worst_dft <= 1e-10 and worst_contour <= 1e-10 and elapsed < 120
    assert report(2, ok, f"{compared} entries, dft rel {worst_dft:.3g}, contour rel {worst_contour:.3g}, "
                         f"{elapsed:.1f} s")


def test_criterion_03_barbour_hall(corpus):
    count, bad = _summary(_checks(corpus, "barbour_hall_lower", "barbour_hall_upper"))
    single = run_sweep([FamilySpec("equal", 1, p=0.5)])[0]
    margin = next(c.margin for c in single.checks if c.name == "barbour_hall_upper")
    ok = bad == 0 and count > 0 and abs(margin) <= 1e-14
    assert report(3, ok, f"{count} checks, {bad} violations, n=1 upper margin {margin:.3g}")


def test_criterion_04_hjk(corpus):
    count, bad = _summary(_checks(corpus, "hjk_relative_entropy_lower"))
    shape_ok = True
    at_top = []
    for lam in (1.0, 2.0):
        ratios = []
        for e in range(4, 11):
            n = 2**e
            p = BernoulliVector.equal(n, lam / n)
            ratios.append(evaluate(p, alphas=(2.0,)).report.kl / (p.lam2 / p.lam) ** 2)
        shape_ok &= all(a > b for a, b in zip(ratios, ratios[1:]))
        shape_ok &= all(0.25 <= r <= 0.5 for r in ratios)
        shape_ok &= 0.25 <= ratios[-1] <= 0.40
        at_top.append(ratios[-1])
    ok = bad == 0 and count > 0 and shape_ok
    assert report(4, ok, f"{count} checks, {bad} violations, ratio at n=1024: "
                         + ", ".join(f"{r:.5f}" for r in at_top))


def test_criterion_05_zacharovas_hwang(corpus):
    count, bad = _summary(_checks(corpus, "zacharovas_hwang_upper"))
    icount, ibad = _summary(_checks(corpus, "zacharovas_hwang_implied"))
    ok = bad == 0 and ibad == 0 and count > 0 and icount > 0
    assert report(5, ok, f"upper {count} checks / {bad} violations, c=6.74 form {icount} / {ibad}")


def test_criterion_06_regime_envelopes(corpus):
    count, bad = _summary(_checks(corpus, "regime_envelope_kl", "regime_envelope_chi2"))
    ones = [r for r in corpus if r.family.kind == "all-ones"]
    exact_ok = max(r.n for r in ones) == 200 and all(not r.violations for r in ones)
    tab = degenerate_asymptotics_check(n_max=10**6, exact_upto=1)
    ok = bad == 0 and count > 0 and exact_ok and tab.envelope_ok
    assert report(6, ok, f"{count} corpus checks, {bad} violations, all-ones exact to n=200, "
                         f"Stirling mode to n=1e6 {'ok' if tab.envelope_ok else 'violated'}")


@pytest.fixture(scope="module")
def degenerate_table():
    start = time.perf_counter()
    tab = degenerate_asymptotics_check(n_max=10**6, exact_upto=1)
    return tab, time.perf_counter() - start


def test_criterion_07a_degenerate_theta_window(degenerate_table):
    tab, elapsed = degenerate_table
    ok = tab.theta_ok and elapsed < 5
    assert report("7a", ok, f"0 < D - log(2 pi n)/2 < 1/(12n) for n = 1..1e6: {tab.theta_ok}, {elapsed:.2f} s")


@pytest.mark.xfail(strict=True, reason="chi2/sqrt(2 pi n) only enters [0.99, 1.01] from n = 1575")
def test_criterion_07b_degenerate_chi2_band(degenerate_table):
    tab, _ = degenerate_table
    ok = tab.chi2_tight_ok
    report("7b", ok, f"chi2/sqrt(2 pi n) in [0.99, 1.01] for n >= 100: range [{tab.chi2_ratio_min:.5f}, "
                     f"{tab.chi2_ratio_max:.5f}], first n in band {tab.chi2_ratio_first_n_in_tight_band}")
    assert ok


def test_criterion_07_degenerate_chi2_alternatives(degenerate_table):
    """What does hold: the [0.9, 1.1] band, monotone approach to 1, and the (1 + chi2) form."""
    tab, _ = degenerate_table
    assert tab.chi2_loose_ok and tab.chi2_ratio_monotone and tab.chi2_shifted_ok
    assert tab.chi2_ratio_first_n_in_tight_band == 1575
    assert 0.96 < tab.chi2_ratio_min < 0.961 and tab.chi2_ratio_max < 1.0


def test_criterion_08_bv_limit():
    rows = bv_limit_check()
    asserted = [r for r in rows if r.asserted]
    bad = [r for r in asserted if not r.holds]
    example = next(r for r in rows if r.lam == 0.05 and r.n == 1000)
    ok = len(asserted) > 0 and not bad and example.asserted and 0.475 <= example.ratio <= 0.525
    assert report(8, ok, f"{len(asserted)} gated rows, {len(bad)} outside band, "
                         f"lambda=0.05 n=1000 ratio {example.ratio:.5f}")


EXPLICIT_CONSTANT_CHECKS = {
    "kl_parts": ("kl_negative_part", "kl_quadratic_lower"),
    "q_upper": ("q_upper_chi2", "q_upper_kl"),
    "q_chi2_lower": ("q_chi2_lower",),
    "tsallis_vajda": ("tsallis_vajda_relation",),
    "entropy_gap": ("entropy_gap_chi2",),
    "h2_cap": ("poisson_h2_cap",),
}


def test_criterion_09_explicit_constant_inequalities(corpus):
    parts = []
    ok = True
    for label, names in EXPLICIT_CONSTANT_CHECKS.items():
        count, bad = _summary(_checks(corpus, *names))
        ok &= count > 0 and bad == 0
        parts.append(f"{label}:{count}/{bad}")
    conv = convolution_pairs()
    ok &= conv.count > 0 and conv.holds
    parts.append(f"convolution:{conv.count}/{conv.violations}")
    n_random = sum(r.family.kind == "random-seeded" for r in corpus)
    ok &= n_random == 500
    assert report(9, ok, f"{n_random} random + structured instances, checks/violations " + " ".join(parts))


def test_criterion_10_saddle_machinery():
    start = time.perf_counter()
    res = saddle_checks()
    elapsed = time.perf_counter() - start
    ok = res.holds and res.bracket_checked > 0 and res.modulus_checked > 0 and res.tail_checked > 0
    ok &= elapsed < 60
    assert report(10, ok, f"bracket {res.bracket_checked}, modulus {res.modulus_checked}, "
                          f"integral {res.integral_checked}, tail {res.tail_checked}, "
                          f"failures {res.bracket_failures + res.modulus_failures + res.integral_failures + res.tail_failures}, "
                          f"{elapsed:.1f} s")


def test_criterion_11_divergence_hierarchy(corpus):
    problems = []
    for rec in corpus:
        rep = rec.report
        if rep is None or rec.lam == 0:
            continue
        if not rep.kl <= rep.chi2 * (1 + 1e-12):
            problems.append((rec.index, "kl>chi2"))
        values = [rep.renyi[a] for a in DEFAULT_ALPHAS]
        if any(b < a * (1 - 1e-12) for a, b in zip(values, values[1:])):
            problems.append((rec.index, "renyi order"))
        for a in DEFAULT_ALPHAS:
            if a == 1.0:
                continue
            d, t = rep.renyi[a], rep.tsallis[a]
            expected = math.expm1((a - 1) * d) / (a - 1)
            if abs(t - expected) > 1e-10 * abs(expected) and abs(t - expected) > 1e-300:
                problems.append((rec.index, f"tsallis identity alpha={a}"))
    trunc_worst = 0.0
    base = TruncationPolicy()
    for p in random_vectors(40, 64, seed=211) + [BernoulliVector.equal(4096, 0.01), BernoulliVector.equal(50, 1.0)]:
        a = evaluate(p, truncation=base).report
        b = evaluate(p, truncation=base.doubled(p.lam)).report
        for x, y in ((a.kl, b.kl), (a.chi2, b.chi2), (a.tv, b.tv), (a.h_z, b.h_z)):
            slack = a.truncation_tail_budget + 1e-12 * abs(x)
            trunc_worst = max(trunc_worst, abs(x - y) / max(slack, 1e-300))
    ok = not problems and trunc_worst <= 1.0
    assert report(11, ok, f"{len(corpus)} instances, {len(problems)} hierarchy failures, "
                          f"truncation change / allowance {trunc_worst:.3g}")


def test_criterion_12_determinism(tmp_path):
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["verify", "--suite", "core", "--seed", "7", "--out", str(out)]) == 0
        outputs.append({f.name: f.read_bytes() for f in sorted(out.glob("*.csv"))})
    same = outputs[0] == outputs[1] and set(outputs[0]) == {"summary.csv", "sweep.csv", "checks.csv", "constants.csv"}
    assert report(12, same, f"{len(outputs[0])} CSV files byte-identical across two verify runs")
