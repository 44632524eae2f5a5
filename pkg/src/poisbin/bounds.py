"""Explicit inequalities between the distances, gated by their applicability.

Each check returns a :class:`BoundCheckResult`.  Inequalities whose constants
are not explicit are kept as ratio recorders (:class:`RatioRecord`) and never
produce a verdict.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .distributions import BernoulliVector
from .divergences import DivergenceReport, evaluate
from .errors import InputError

REL_TOL = 1e-12

# constants
BH_LOWER = 1.0 / 32.0
HJK = 0.25
ZH_FACTOR = 2.0 * (math.sqrt(math.e) - 1.0) ** 2
ZH_IMPLIED = 6.74
ENV_C1 = 1e-8
ENV_C2 = 5.6e7
SMALL_P_CHI2 = 15.0
KAPPA_C = 7e6
Q_CHI2 = 19.0
Q_KL = 23.0
Q_LOWER_C0 = 2.5e-6
KL_C0_LOG = -14.0  # the constant is e^-14
KL_KAPPA0_LOG_GAP = -2e7  # kappa_0 = 1 - e^(-2e7)
KL_LAMBDA0_LOG = 2e7  # lambda_0 = e^(2e7)
H2_BIG = math.sqrt(50.0)
H2_SMALL = 5.0
KAPPA_GRID = tuple(round(0.1 * j, 1) for j in range(1, 10))

UPPER, LOWER, TWO_SIDED, RELATION = "upper", "lower", "two-sided", "relation"


@dataclass(frozen=True)
class BoundSpec:
    """Catalog entry for one inequality."""

    name: str
    side: str
    constants: dict
    applicability: str
    statement: str
    source: str

    def as_row(self) -> dict:
        row = asdict(self)
        row["constants"] = ";".join(f"{k}={v!r}" for k, v in self.constants.items())
        return row


CATALOG: tuple[BoundSpec, ...] = (
    BoundSpec("barbour_hall_lower", LOWER, {"c": BH_LOWER}, "lambda > 0",
              "d/2 >= c min(1, 1/lambda) lambda_2", "Barbour-Hall total variation bound"),
    BoundSpec("barbour_hall_upper", UPPER, {}, "lambda > 0",
              "d/2 <= (1 - e^-lambda) lambda_2 / lambda", "Barbour-Hall total variation bound"),
    BoundSpec("hjk_relative_entropy_lower", LOWER, {"c": HJK}, "lambda > 0",
              "D >= c (lambda_2/lambda)^2", "universal relative entropy lower bound"),
    BoundSpec("zacharovas_hwang_upper", UPPER, {"c": ZH_FACTOR}, "lambda_2 < lambda",
              "chi2 <= c r^2 (1 - r)^-3, r = lambda_2/lambda", "Zacharovas-Hwang chi-square bound"),
    BoundSpec("zacharovas_hwang_implied", UPPER, {"c": ZH_IMPLIED}, "lambda_2 <= lambda/2",
              "chi2 <= c r^2", "Zacharovas-Hwang bound at r <= 1/2"),
    BoundSpec("regime_envelope_kl", TWO_SIDED, {"c1": ENV_C1, "c2": ENV_C2}, "lambda > 0",
              "c1 r^2 (1 + log F) <= D <= c2 r^2 (1 + log F)", "two-sided regime envelope for D"),
    BoundSpec("regime_envelope_chi2", TWO_SIDED, {"c1": ENV_C1, "c2": ENV_C2}, "lambda > 0",
              "c1 r^2 sqrt(F) <= chi2 <= c2 r^2 sqrt(F)", "two-sided regime envelope for chi2"),
    BoundSpec("small_p_chain_lower", LOWER, {"c": HJK}, "max p <= 1/2",
              "D >= c r^2", "small-probability chain"),
    BoundSpec("small_p_chain_kl_chi2", RELATION, {}, "max p <= 1/2",
              "D <= chi2", "small-probability chain"),
    BoundSpec("small_p_chain_chi2", UPPER, {"c": SMALL_P_CHI2}, "max p <= 1/2 and lambda <= 1/2",
              "chi2 <= c r^2", "small-probability chain, explicit constant"),
    BoundSpec("kappa_chi2_upper", UPPER, {"c": KAPPA_C}, "lambda >= 1/2 and lambda_2 <= kappa lambda",
              "chi2 <= c (1 - kappa)^-3 r^2", "non-degenerate chi2 upper bound"),
    BoundSpec("q_upper_chi2", UPPER, {"c": Q_CHI2}, "lambda >= 1/2",
              "chi2 <= c sqrt(Q)", "degenerate-regime upper bound"),
    BoundSpec("q_upper_kl", UPPER, {"c": Q_KL}, "lambda >= 1/2",
              "D <= c log(e Q)", "degenerate-regime upper bound"),
    BoundSpec("q_chi2_lower", LOWER, {"c0": Q_LOWER_C0}, "lambda >= 1/2",
              "1 + chi2 >= c0 sqrt(Q)", "degenerate-regime chi2 lower bound"),
    BoundSpec("q_chi2_lower_strict", LOWER, {"c0": Q_LOWER_C0},
              "lambda >= 1/2 and lambda_2 >= (1 - c0^2/4) lambda",
              "chi2 >= (c0/9) sqrt(Q)", "degenerate-regime chi2 lower bound"),
    BoundSpec("q_kl_lower", LOWER, {"c0": "e^-14", "kappa0": "1 - e^-2e7", "lambda0": "e^2e7"},
              "lambda_2 >= kappa0 lambda and lambda >= lambda0",
              "D >= c0 log(e Q)", "degenerate-regime relative entropy lower bound (formula-only)"),
    BoundSpec("tsallis_vajda_relation", RELATION, {}, "alpha >= 2",
              "T_alpha <= 2^alpha/(alpha-1) (T_2 + chi_alpha)", "Tsallis versus Vajda-Pearson"),
    BoundSpec("entropy_gap_chi2", UPPER, {}, "finite entropies",
              "H(Z) - H(W) <= chi2 + H_2(Z) sqrt(chi2)", "entropy gap via chi2"),
    BoundSpec("poisson_h2_cap", UPPER, {"c_big": H2_BIG, "c_small": H2_SMALL}, "lambda > 0",
              "H_2(Z) <= sqrt(50) log(1+lambda) (lambda >= 1); 5 sqrt(lambda) log(e/lambda) (lambda <= 1)",
              "second log-moment of a Poisson law"),
    BoundSpec("convolution_subadditivity_kl", RELATION, {}, "two Bernoulli vectors",
              "D(W1+W2||Z1+Z2) <= D1 + D2", "independent sums"),
    BoundSpec("convolution_subadditivity_chi2", RELATION, {}, "two Bernoulli vectors",
              "1 + chi2 <= (1 + chi2_1)(1 + chi2_2)", "independent sums"),
    BoundSpec("kl_negative_part", UPPER, {}, "absolute continuity",
              "-sum_{w<v} w log(w/v) <= 1", "negative part of the KL sum"),
    BoundSpec("kl_quadratic_lower", RELATION, {}, "absolute continuity",
              "1/2 sum (w-v)^2/max(w,v) <= D", "quadratic lower bound on D"),
)

CATALOG_BY_NAME = {b.name: b for b in CATALOG}

RATIO_NAMES = (
    "hjk_ratio", "regime_envelope_kl_ratio", "regime_envelope_chi2_ratio",
    "small_p_chi2_ratio", "tsallis_shape", "entropy_gap_shape",
)


@dataclass(frozen=True)
class BoundCheckResult:
    name: str
    applicable: bool
    lhs: float = math.nan
    rhs: float = math.nan
    margin: float = math.nan
    holds: bool = True
    precision_mode: str = "binary64"
    side: str = UPPER
    lower_rhs: float = math.nan
    note: str = ""

    def as_row(self) -> dict:
        return asdict(self)


def _scale(*xs) -> float:
    return max([1.0] + [abs(x) for x in xs if math.isfinite(x)])


def not_applicable(name: str, note: str = "", precision_mode: str = "binary64") -> BoundCheckResult:
    return BoundCheckResult(name, False, note=note, precision_mode=precision_mode,
                            side=CATALOG_BY_NAME[name].side if name in CATALOG_BY_NAME else UPPER)


def upper_check(name: str, lhs: float, rhs: float, precision_mode: str = "binary64", note: str = "",
                side: str = UPPER) -> BoundCheckResult:
    """lhs <= rhs."""
    margin = rhs - lhs
    holds = margin >= -REL_TOL * _scale(lhs, rhs)
    return BoundCheckResult(name, True, lhs, rhs, margin, bool(holds), precision_mode, side, note=note)


def lower_check(name: str, lhs: float, rhs: float, precision_mode: str = "binary64", note: str = "") -> BoundCheckResult:
    """lhs >= rhs."""
    margin = lhs - rhs
    holds = margin >= -REL_TOL * _scale(lhs, rhs)
    return BoundCheckResult(name, True, lhs, rhs, margin, bool(holds), precision_mode, LOWER, note=note)


def two_sided_check(name: str, value: float, lo: float, hi: float, precision_mode: str = "binary64") -> BoundCheckResult:
    """lo <= value <= hi; margin is the smaller of the two gaps."""
    margin = min(value - lo, hi - value)
    holds = margin >= -REL_TOL * _scale(value, lo, hi)
    return BoundCheckResult(name, True, value, hi, margin, bool(holds), precision_mode, TWO_SIDED, lo)


@dataclass(frozen=True)
class RatioRecord:
    """An observed ratio against an inequality with unspecified constant."""

    name: str
    value: float
    alpha: float | None = None
    note: str = ""


# ---------------------------------------------------------------------------
# individual checks


def barbour_hall(lam: float, lam2: float, report: DivergenceReport) -> list[BoundCheckResult]:
    mode = report.precision_mode
    if lam <= 0:
        return [not_applicable("barbour_hall_lower", "lambda = 0", mode), not_applicable("barbour_hall_upper", "lambda = 0", mode)]
    half_d = 0.5 * report.tv
    return [
        lower_check("barbour_hall_lower", half_d, BH_LOWER * min(1.0, 1.0 / lam) * lam2, mode),
        upper_check("barbour_hall_upper", half_d, -math.expm1(-lam) / lam * lam2, mode),
    ]


def hjk_relative_entropy_lower(lam: float, lam2: float, report: DivergenceReport) -> BoundCheckResult:
    if lam <= 0:
        return not_applicable("hjk_relative_entropy_lower", "lambda = 0", report.precision_mode)
    r = lam2 / lam
    return lower_check("hjk_relative_entropy_lower", report.kl, HJK * r * r, report.precision_mode)


def zacharovas_hwang_upper(lam: float, lam2: float, variance: float, report: DivergenceReport) -> list[BoundCheckResult]:
    mode = report.precision_mode
    if lam <= 0 or variance <= 0:
        return [not_applicable("zacharovas_hwang_upper", "needs lambda_2 < lambda", mode),
                not_applicable("zacharovas_hwang_implied", "needs lambda_2 < lambda", mode)]
    r = lam2 / lam
    one_minus_r = variance / lam
    out = [upper_check("zacharovas_hwang_upper", report.chi2, ZH_FACTOR * r * r / one_minus_r**3, mode)]
    if r <= 0.5:
        out.append(upper_check("zacharovas_hwang_implied", report.chi2, ZH_IMPLIED * r * r, mode))
    else:
        out.append(not_applicable("zacharovas_hwang_implied", "needs lambda_2 <= lambda/2", mode))
    return out


def regime_envelope(lam: float, lam2: float, big_f: float, kl: float, chi2: float,
                    precision_mode: str = "binary64") -> list[BoundCheckResult]:
    """Two-sided envelopes for D and chi2 in terms of r = lambda_2/lambda and F."""
    if lam <= 0:
        return [not_applicable("regime_envelope_kl", "lambda = 0", precision_mode),
                not_applicable("regime_envelope_chi2", "lambda = 0", precision_mode)]
    r2 = (lam2 / lam) ** 2
    a = r2 * (1.0 + math.log(big_f))
    b = r2 * math.sqrt(big_f)
    return [
        two_sided_check("regime_envelope_kl", kl, ENV_C1 * a, ENV_C2 * a, precision_mode),
        two_sided_check("regime_envelope_chi2", chi2, ENV_C1 * b, ENV_C2 * b, precision_mode),
    ]


def small_p_chain(lam: float, lam2: float, max_p: float, report: DivergenceReport) -> tuple[list[BoundCheckResult], list[RatioRecord]]:
    mode = report.precision_mode
    names = ("small_p_chain_lower", "small_p_chain_kl_chi2", "small_p_chain_chi2")
    if lam <= 0 or max_p > 0.5:
        why = "lambda = 0" if lam <= 0 else "max p > 1/2"
        return [not_applicable(n, why, mode) for n in names], []
    r2 = (lam2 / lam) ** 2
    out = [
        lower_check(names[0], report.kl, HJK * r2, mode),
        upper_check(names[1], report.kl, report.chi2, mode, side=RELATION),
    ]
    if lam <= 0.5:
        out.append(upper_check(names[2], report.chi2, SMALL_P_CHI2 * r2, mode))
    else:
        out.append(not_applicable(names[2], "lambda > 1/2: constant not explicit", mode))
    return out, [RatioRecord("small_p_chi2_ratio", report.chi2 / r2, note=f"lambda={lam!r}")]


def kappa_for(ratio: float) -> float | None:
    """Smallest grid kappa in {0.1, ..., 0.9} with lambda_2 <= kappa lambda."""
    for k in KAPPA_GRID:
        if ratio <= k:
            return k
    return None


def kappa_chi2_upper(lam: float, lam2: float, report: DivergenceReport, kappa: float | None) -> BoundCheckResult:
    mode = report.precision_mode
    if kappa is not None and not (0.0 < kappa < 1.0):
        raise InputError(f"kappa must lie in (0, 1), got {kappa!r}")
    if lam < 0.5:
        return not_applicable("kappa_chi2_upper", "lambda < 1/2", mode)
    if kappa is None or lam2 > kappa * lam:
        return not_applicable("kappa_chi2_upper", "lambda_2 > kappa lambda", mode)
    r = lam2 / lam
    return upper_check("kappa_chi2_upper", report.chi2, KAPPA_C * (1.0 - kappa) ** -3 * r * r, mode,
                       note=f"kappa={kappa!r}")


def q_upper(lam: float, q: float, report: DivergenceReport) -> list[BoundCheckResult]:
    mode = report.precision_mode
    if lam < 0.5:
        return [not_applicable("q_upper_chi2", "lambda < 1/2", mode), not_applicable("q_upper_kl", "lambda < 1/2", mode)]
    return [
        upper_check("q_upper_chi2", report.chi2, Q_CHI2 * math.sqrt(q), mode),
        upper_check("q_upper_kl", report.kl, Q_KL * (1.0 + math.log(q)), mode),
    ]


def q_chi2_lower(lam: float, variance: float, q: float, report: DivergenceReport) -> list[BoundCheckResult]:
    mode = report.precision_mode
    if lam < 0.5:
        return [not_applicable("q_chi2_lower", "lambda < 1/2", mode), not_applicable("q_chi2_lower_strict", "lambda < 1/2", mode)]
    out = [lower_check("q_chi2_lower", 1.0 + report.chi2, Q_LOWER_C0 * math.sqrt(q), mode)]
    # lambda_2 >= (1 - c0^2/4) lambda  <=>  lambda - lambda_2 <= (c0^2/4) lambda
    if variance <= Q_LOWER_C0**2 / 4.0 * lam:
        out.append(lower_check("q_chi2_lower_strict", report.chi2, Q_LOWER_C0 / 9.0 * math.sqrt(q), mode))
    else:
        out.append(not_applicable("q_chi2_lower_strict", "lambda_2 < (1 - c0^2/4) lambda", mode))
    return out


def q_kl_lower(lam: float, variance: float, report: DivergenceReport) -> BoundCheckResult:
    """Applicable only for lambda >= e^(2e7); unreachable in binary64 or at any desk scale."""
    mode = report.precision_mode
    if lam <= 0 or math.log(lam) < KL_LAMBDA0_LOG:
        return not_applicable("q_kl_lower", "lambda < lambda0 = e^(2e7)", mode)
    if variance > math.exp(KL_KAPPA0_LOG_GAP) * lam:
        return not_applicable("q_kl_lower", "lambda_2 < kappa0 lambda", mode)
    q = lam / max(1.0, variance)
    return lower_check("q_kl_lower", report.kl, math.exp(KL_C0_LOG) * (1.0 + math.log(q)), mode)


def q_kl_formula_margin(n: int, d_value: float) -> float:
    """D - e^-14 log(e n) for the all-ones family, where Q = n."""
    return d_value - math.exp(KL_C0_LOG) * (1.0 + math.log(n))


def tsallis_vajda_relation(report: DivergenceReport, alpha: float) -> BoundCheckResult:
    mode = report.precision_mode
    if alpha < 2:
        return not_applicable("tsallis_vajda_relation", "alpha < 2", mode)
    t_a = report.tsallis[alpha]
    rhs = 2.0**alpha / (alpha - 1.0) * (report.chi2 + report.vajda[alpha])
    return upper_check("tsallis_vajda_relation", t_a, rhs, mode, note=f"alpha={alpha!r}", side=RELATION)


def entropy_gap_chi2(report: DivergenceReport) -> BoundCheckResult:
    """H(Z) - H(W) <= chi2 + H_2(Z) sqrt(chi2), with the truncation budget as slack."""
    rhs = report.chi2 + report.h2_z * math.sqrt(report.chi2) + report.truncation_tail_budget
    return upper_check("entropy_gap_chi2", report.entropy_diff, rhs, report.precision_mode)


def poisson_h2_cap_value(lam: float) -> float:
    if lam >= 1.0:
        return H2_BIG * math.log1p(lam)
    return H2_SMALL * math.sqrt(lam) * (1.0 - math.log(lam))


def poisson_h2_cap(lam: float, h2: float, precision_mode: str = "binary64") -> BoundCheckResult:
    if lam <= 0:
        return not_applicable("poisson_h2_cap", "lambda = 0", precision_mode)
    return upper_check("poisson_h2_cap", h2, poisson_h2_cap_value(lam), precision_mode,
                       note="large-lambda branch" if lam >= 1 else "small-lambda branch")


def convolution_subadditivity(pa: BernoulliVector, pb: BernoulliVector, alphas=(1.0, 2.0)) -> list[BoundCheckResult]:
    """Distances of the independent sum against those of the parts."""
    ra = evaluate(pa, alphas).report
    rb = evaluate(pb, alphas).report
    rab = evaluate(BernoulliVector.concat(pa, pb), alphas).report
    return [
        upper_check("convolution_subadditivity_kl", rab.kl, ra.kl + rb.kl, side=RELATION),
        upper_check("convolution_subadditivity_chi2", 1.0 + rab.chi2, (1.0 + ra.chi2) * (1.0 + rb.chi2), side=RELATION),
    ]


def kl_structure(w, v, kl_mode: str = "binary64") -> list[BoundCheckResult]:
    from .divergences import kl_diagnostics

    diag = kl_diagnostics(w, v)
    return [
        upper_check("kl_negative_part", diag.negative_part, 1.0, kl_mode),
        upper_check("kl_quadratic_lower", diag.lower_quadratic, diag.kl, kl_mode, side=RELATION),
    ]


# ---------------------------------------------------------------------------
# ratio recorders


def shape_ratios(lam: float, lam2: float, big_f: float, report: DivergenceReport) -> list[RatioRecord]:
    """Observed ratios against the inequalities whose constants are not explicit."""
    if lam <= 0:
        return []
    r = lam2 / lam
    r2 = r * r
    out = [
        RatioRecord("hjk_ratio", report.kl / (HJK * r2)),
        RatioRecord("regime_envelope_kl_ratio", report.kl / (r2 * (1.0 + math.log(big_f)))),
        RatioRecord("regime_envelope_chi2_ratio", report.chi2 / (r2 * math.sqrt(big_f))),
    ]
    for a, t in report.tsallis.items():
        if a > 1.0:
            out.append(RatioRecord("tsallis_shape", t / (r2 * big_f ** ((a - 1.0) / 2.0)), alpha=a))
    if r <= 0.5:
        out.append(RatioRecord("entropy_gap_shape", report.entropy_diff / (r * math.log(2.0 + lam)),
                               note="log(2+lambda) form"))
    else:
        out.append(RatioRecord("entropy_gap_shape_general", report.entropy_diff / r, note="C_lambda form"))
    return out


# ---------------------------------------------------------------------------
# everything for one instance


@dataclass
class BoundBundle:
    checks: list = field(default_factory=list)
    ratios: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [c for c in self.checks if c.applicable and not c.holds]


def check_instance(p: BernoulliVector, report: DivergenceReport, w=None, v=None,
                   kappa: float | None = None) -> BoundBundle:
    """Every catalog check that depends on a single instance.

    ``kappa`` defaults to lambda_2/lambda rounded up to the 0.1 grid.
    ``w`` and ``v`` (the two pmfs) enable the KL structure checks.
    """
    lam, lam2, var = p.lam, p.lam2, p.variance
    mode = report.precision_mode
    if kappa is None and lam > 0:
        kappa = kappa_for(p.ratio)
    b = BoundBundle()
    if lam <= 0:
        b.checks = [not_applicable(s.name, "lambda = 0", mode) for s in CATALOG
                    if not s.name.startswith("convolution")]
        return b
    b.checks.extend(barbour_hall(lam, lam2, report))
    b.checks.append(hjk_relative_entropy_lower(lam, lam2, report))
    b.checks.extend(zacharovas_hwang_upper(lam, lam2, var, report))
    b.checks.extend(regime_envelope(lam, lam2, p.big_f, report.kl, report.chi2, mode))
    chain, chain_ratios = small_p_chain(lam, lam2, p.max_p, report)
    b.checks.extend(chain)
    b.checks.append(kappa_chi2_upper(lam, lam2, report, kappa))
    b.checks.extend(q_upper(lam, p.q_quantity, report))
    b.checks.extend(q_chi2_lower(lam, var, p.q_quantity, report))
    b.checks.append(q_kl_lower(lam, var, report))
    for a in sorted(report.tsallis):
        if a >= 2.0:
            b.checks.append(tsallis_vajda_relation(report, a))
    b.checks.append(entropy_gap_chi2(report))
    b.checks.append(poisson_h2_cap(lam, report.h2_z, mode))
    if w is not None and v is not None:
        b.checks.extend(kl_structure(w, v, mode))
    b.ratios = chain_ratios + shape_ratios(lam, lam2, p.big_f, report)
    return b


def catalog_rows() -> list[dict]:
    return [s.as_row() for s in CATALOG]
