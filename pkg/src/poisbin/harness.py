"""Parameter families, sweeps, empirical constants and the property suites."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import saddle
from .bounds import (
    BoundCheckResult,
    RatioRecord,
    check_instance,
    convolution_subadditivity,
    q_kl_formula_margin,
    regime_envelope,
    upper_check,
    lower_check,
)
from .distributions import BernoulliVector, poisson_binomial_pmf_dp
from .divergences import DEFAULT_ALPHAS, evaluate, poisson_law, shannon_entropy
from .errors import InputError, PoisbinError
from .kernels import reverse_cumsum
from .precision import DEFAULT_POLICY, PrecisionPolicy, log_factorial

SCHEMA = "# schema=1"
DEFAULT_SEED = 20240611
FAMILY_KINDS = ("equal", "two-block", "geometric-decay", "one-heavy", "all-ones", "random-seeded")


def fmt(x) -> str:
    """17 significant digits, enough to round-trip binary64."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class FamilySpec:
    """A reproducible recipe for one Bernoulli vector.

    equal:            n copies of p
    two-block:        n_heavy copies of heavy followed by n - n_heavy of light
    geometric-decay:  p_j = p g^j, j = 0..n-1
    one-heavy:        a single heavy probability plus n - 1 copies of light
    all-ones:         n copies of 1
    random-seeded:    n draws p_j = u_j^shape from PCG64(seed)
    """

    kind: str
    n: int
    p: float = 0.0
    heavy: float = 0.0
    light: float = 0.0
    n_heavy: int = 0
    ratio: float = 0.0
    shape: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise InputError(f"unknown family kind {self.kind!r}")
        if self.n < 1:
            raise InputError("family needs n >= 1")

    def build(self) -> BernoulliVector:
        n = self.n
        if self.kind == "equal":
            return BernoulliVector.equal(n, self.p)
        if self.kind == "two-block":
            return BernoulliVector((self.heavy,) * self.n_heavy + (self.light,) * (n - self.n_heavy))
        if self.kind == "geometric-decay":
            return BernoulliVector(tuple(self.p * self.ratio**j for j in range(n)))
        if self.kind == "one-heavy":
            return BernoulliVector((self.heavy,) + (self.light,) * (n - 1))
        if self.kind == "all-ones":
            return BernoulliVector.equal(n, 1.0)
        rng = np.random.default_rng(self.seed)
        return BernoulliVector(tuple(rng.random(n) ** self.shape))

    @property
    def family_id(self) -> str:
        k = self.kind
        if k == "equal":
            return f"equal(n={self.n},p={self.p!r})"
        if k == "two-block":
            return f"two-block(n={self.n},heavy={self.heavy!r}x{self.n_heavy},light={self.light!r})"
        if k == "geometric-decay":
            return f"geometric-decay(n={self.n},a={self.p!r},g={self.ratio!r})"
        if k == "one-heavy":
            return f"one-heavy(n={self.n},heavy={self.heavy!r},light={self.light!r})"
        if k == "all-ones":
            return f"all-ones(n={self.n})"
        return f"random-seeded(n={self.n},shape={self.shape!r},seed={self.seed})"

    @classmethod
    def parse(cls, text: str) -> "FamilySpec":
        """``kind:key=value,...``, e.g. ``equal:n=10,p=0.1`` or ``all-ones:n=5``."""
        kind, _, rest = text.partition(":")
        kw = {}
        for item in filter(None, rest.split(",")):
            key, eq, val = item.partition("=")
            if not eq:
                raise InputError(f"family parameter {item!r} is not key=value")
            key = key.strip()
            if key in ("n", "n_heavy", "seed"):
                kw[key] = int(val)
            elif key in ("p", "heavy", "light", "ratio", "shape"):
                kw[key] = float(val)
            else:
                raise InputError(f"unknown family parameter {key!r}")
        try:
            return cls(kind.strip(), **kw)
        except TypeError as exc:
            raise InputError(str(exc)) from None


def equal_grid(lams=(1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3), max_log2_n: int = 12) -> list[FamilySpec]:
    out = []
    for lam in lams:
        for e in range(max_log2_n + 1):
            n = 2**e
            if lam <= n:
                out.append(FamilySpec("equal", n, p=lam / n))
    return out


def random_corpus(count: int = 500, seed: int = DEFAULT_SEED, max_n: int = 64) -> list[FamilySpec]:
    """``count`` random vectors; each carries its own derived seed."""
    meta = np.random.default_rng(seed)
    shapes = (0.25, 1.0, 4.0)
    out = []
    for j in range(count):
        n = int(meta.integers(1, max_n + 1))
        out.append(FamilySpec("random-seeded", n, shape=shapes[j % 3], seed=seed * 1000 + j))
    return out


def default_corpus(seed: int = DEFAULT_SEED, n_random: int = 500, max_log2_n: int = 12,
                   all_ones_max: int = 200) -> list[FamilySpec]:
    fams = equal_grid(max_log2_n=max_log2_n)
    for n, m in ((10, 1), (10, 5), (50, 10), (100, 50), (200, 20)):
        fams.append(FamilySpec("two-block", n, heavy=0.9, light=0.01, n_heavy=m))
    for n in (10, 50, 200):
        for g in (0.5, 0.9):
            fams.append(FamilySpec("geometric-decay", n, p=0.9, ratio=g))
    for n in (1, 10, 100, 1000):
        fams.append(FamilySpec("one-heavy", n, heavy=0.99, light=0.001))
    fams.extend(FamilySpec("all-ones", n) for n in range(1, all_ones_max + 1))
    fams.extend(random_corpus(n_random, seed))
    return fams


# ---------------------------------------------------------------------------
# sweep


@dataclass
class SweepRecord:
    index: int
    family: FamilySpec
    n: int = 0
    lam: float = math.nan
    lam2: float = math.nan
    big_f: float = math.nan
    q: float = math.nan
    report: object = None
    checks: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    precision_mode: str = "binary64"
    error: str = ""

    @property
    def violations(self) -> list[BoundCheckResult]:
        return [c for c in self.checks if c.applicable and not c.holds]


def evaluate_family(index: int, fam: FamilySpec, alphas=DEFAULT_ALPHAS,
                    policy: PrecisionPolicy = DEFAULT_POLICY) -> SweepRecord:
    rec = SweepRecord(index, fam)
    try:
        p = fam.build()
        rec.n, rec.lam, rec.lam2, rec.big_f, rec.q = p.n, p.lam, p.lam2, p.big_f, p.q_quantity
        inst = evaluate(p, alphas, policy)
        rec.report = inst.report
        rec.precision_mode = inst.report.precision_mode
        bundle = check_instance(p, inst.report, inst.w, inst.v)
        rec.checks, rec.ratios = bundle.checks, bundle.ratios
    except PoisbinError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
    return rec


def _evaluate_star(args):
    return evaluate_family(*args)


def run_sweep(families, alphas=DEFAULT_ALPHAS, policy: PrecisionPolicy = DEFAULT_POLICY,
              workers: int = 1) -> list[SweepRecord]:
    """One record per family, in input order; failures land in ``error``."""
    jobs = [(i, f, tuple(alphas), policy) for i, f in enumerate(families)]
    if workers <= 1 or len(jobs) < 2:
        return [_evaluate_star(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate_star, jobs, chunksize=8))


# ---------------------------------------------------------------------------
# empirical constants


@dataclass(frozen=True)
class EmpiricalConstantReport:
    name: str
    min_ratio: float
    argmin: str
    max_ratio: float
    argmax: str
    count: int


def _ratio_key(r: RatioRecord) -> str:
    return r.name if r.alpha is None else f"{r.name}[alpha={r.alpha!r}]"


def empirical_constants(records) -> list[EmpiricalConstantReport]:
    """Extremal ratios per recorder with the witnessing family."""
    acc: dict[str, list] = {}
    for rec in records:
        for r in rec.ratios:
            if not math.isfinite(r.value):
                continue
            key = _ratio_key(r)
            cur = acc.get(key)
            fid = rec.family.family_id
            if cur is None:
                acc[key] = [r.value, fid, r.value, fid, 1]
                continue
            if r.value < cur[0]:
                cur[0], cur[1] = r.value, fid
            if r.value > cur[2]:
                cur[2], cur[3] = r.value, fid
            cur[4] += 1
    return [EmpiricalConstantReport(k, *v) for k, v in sorted(acc.items())]


# ---------------------------------------------------------------------------
# Borisov-Vorozheikin limit


@dataclass(frozen=True)
class BVRow:
    lam: float
    n: int
    lam6_lam2: float
    ratio: float
    asserted: bool
    holds: bool


BV_GATE = 1e-6


def bv_limit_check(lams=(0.01, 0.05, 0.1, 0.5, 1.0, 5.0), ns=(10, 100, 1000, 10000)) -> list[BVRow]:
    """chi2 / (lambda_2/lambda)^2 for binomial(n, lambda/n); within 5% of 1/2 once lambda^6 lambda_2 <= 1e-6."""
    rows = []
    for lam in lams:
        for n in ns:
            if lam > n:
                continue
            p = BernoulliVector.equal(n, lam / n)
            r = p.ratio
            rep = evaluate(p, alphas=(2.0,)).report
            ratio = rep.chi2 / (r * r)
            gate = lam**6 * p.lam2
            asserted = gate <= BV_GATE
            rows.append(BVRow(lam, n, gate, ratio, asserted, (not asserted) or abs(ratio - 0.5) <= 0.025))
    return rows


# ---------------------------------------------------------------------------
# degenerate family p_j = 1


def _stirling_increments(n: np.ndarray) -> np.ndarray:
    """d(n) = theta(n) - theta(n+1) = (n + 1/2) log(1 + 1/n) - 1, without cancellation."""
    out = np.empty(n.shape, dtype=np.float64)
    small = n < 10
    with mpmath.workdps(40):
        for i in np.nonzero(small)[0]:
            m = mpmath.mpf(int(n[i]))
            out[i] = float((m + mpmath.mpf(1) / 2) * mpmath.log1p(1 / m) - 1)
    x = 1.0 / n[~small].astype(np.float64)
    acc = np.zeros_like(x)
    for j in range(22, 1, -1):  # Horner from the top
        c = (-1) ** j * (j - 1) / (2.0 * j * (j + 1))
        acc = acc * x + c
    out[~small] = acc * x * x
    return out


def degenerate_theta(n_max: int) -> np.ndarray:
    """theta(n) = log(n! e^n / n^n) - log(2 pi n)/2 for n = 1..n_max.

    theta(n_max) comes from a 50-digit evaluation; the rest is the
    compensated suffix sum of the increments d(n).
    """
    with mpmath.workdps(50):
        m = mpmath.mpf(n_max)
        anchor = float(mpmath.loggamma(m + 1) + m - m * mpmath.log(m) - mpmath.log(2 * mpmath.pi * m) / 2)
    ns = np.arange(1, n_max, dtype=np.int64)
    inc = np.concatenate([_stirling_increments(ns), [anchor]])
    return reverse_cumsum(inc)


def degenerate_closed_form(n: int, digits: int = 50) -> tuple[float, float]:
    """(D, chi2) for the all-ones family: log(n! e^n / n^n) and n! e^n / n^n - 1."""
    with mpmath.workdps(digits):
        m = mpmath.mpf(n)
        d = mpmath.loggamma(m + 1) + m - m * mpmath.log(m)
        return float(d), float(mpmath.expm1(d))


@dataclass
class DegenerateTable:
    n_max: int
    theta_ok: bool
    theta_first_failure: int | None
    theta_robbins_lower_ok: bool
    chi2_ratio_min: float
    chi2_ratio_max: float
    chi2_ratio_monotone: bool
    chi2_ratio_first_n_in_tight_band: int | None
    chi2_tight_ok: bool
    chi2_loose_ok: bool
    chi2_shifted_ok: bool
    envelope_ok: bool
    q_kl_formula_ok: bool
    cross_check_max_rel: float
    rows: list = field(default_factory=list)


def degenerate_asymptotics_check(n_max: int = 10**6, exact_upto: int = 200, from_n: int = 100,
                                 sample=(1, 2, 5, 10, 100, 200, 1000, 10**4, 10**5, 10**6)) -> DegenerateTable:
    """Stirling-mode certification of the all-ones family for n = 1..n_max.

    * 0 < theta(n) < 1/(12n) (and the sharper 1/(12n+1) < theta(n));
    * chi2/sqrt(2 pi n) for n >= from_n: its range, monotonicity and the
      bands [0.99, 1.01] (tight), [0.9, 1.1] (loose) and
      (1 + chi2)/sqrt(2 pi n) in [0.99, 1.01] (shifted);
    * both regime envelopes with lambda = lambda_2 = n and F = n;
    * the formula-only relative entropy lower bound D >= e^-14 log(e n);
    * closed forms against pmf-based distances for n <= exact_upto.
    """
    theta = degenerate_theta(n_max)
    n = np.arange(1, n_max + 1, dtype=np.float64)
    upper = 1.0 / (12.0 * n)
    ok = (theta > 0) & (theta < upper)
    first_fail = None if ok.all() else int(np.argmin(ok)) + 1
    robbins = bool(np.all(theta > 1.0 / (12.0 * n + 1.0)))
    root = np.sqrt(2.0 * np.pi * n)
    d = 0.5 * np.log(2.0 * np.pi * n) + theta
    chi2 = np.expm1(d)
    ratio = np.exp(theta) - 1.0 / root
    tail = ratio[from_n - 1:]
    tight = (tail >= 0.99) & (tail <= 1.01)
    first_tight = int(np.argmax(tight)) + from_n if tight.any() else None
    shifted = (chi2 + 1.0) / root
    # envelopes with r = 1, F = n
    env_ok = bool(np.all((d >= 1e-8 * (1 + np.log(n))) & (d <= 5.6e7 * (1 + np.log(n)))
                         & (chi2 >= 1e-8 * np.sqrt(n)) & (chi2 <= 5.6e7 * np.sqrt(n))))
    qkl_ok = bool(np.all(d - math.exp(-14.0) * (1.0 + np.log(n)) > 0))
    worst = 0.0
    for k in range(1, min(exact_upto, n_max) + 1):
        rep = evaluate(BernoulliVector.equal(k, 1.0), alphas=(2.0,)).report
        dk, ck = degenerate_closed_form(k)
        worst = max(worst, abs(rep.kl - dk) / dk, abs(rep.chi2 - ck) / ck)
    rows = []
    for k in sample:
        if k <= n_max:
            rows.append({"n": k, "theta": float(theta[k - 1]), "one_over_12n": 1.0 / (12 * k),
                         "D": float(d[k - 1]), "chi2": float(chi2[k - 1]),
                         "chi2_over_sqrt_2pin": float(ratio[k - 1]),
                         "q_kl_margin": q_kl_formula_margin(k, float(d[k - 1]))})
    return DegenerateTable(
        n_max=n_max,
        theta_ok=bool(ok.all()),
        theta_first_failure=first_fail,
        theta_robbins_lower_ok=robbins,
        chi2_ratio_min=float(tail.min()) if tail.size else math.nan,
        chi2_ratio_max=float(tail.max()) if tail.size else math.nan,
        chi2_ratio_monotone=bool(np.all(np.diff(tail) > 0)),
        chi2_ratio_first_n_in_tight_band=first_tight,
        chi2_tight_ok=bool(tight.all()),
        chi2_loose_ok=bool(np.all((tail >= 0.9) & (tail <= 1.1))),
        chi2_shifted_ok=bool(np.all((shifted[from_n - 1:] >= 0.99) & (shifted[from_n - 1:] <= 1.01))),
        envelope_ok=env_ok,
        q_kl_formula_ok=qkl_ok,
        cross_check_max_rel=worst,
        rows=rows,
    )


def degenerate_envelope_checks(ns) -> list[BoundCheckResult]:
    """Regime envelopes for individual all-ones sizes via the closed form."""
    out = []
    for k in ns:
        d, c = degenerate_closed_form(int(k))
        out.extend(regime_envelope(float(k), float(k), float(k), d, c))
    return out


# ---------------------------------------------------------------------------
# structural results


@dataclass
class StructureResult:
    name: str
    count: int
    violations: int
    worst_margin: float
    details: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.violations == 0


def _entropy_of(p: BernoulliVector) -> float:
    return shannon_entropy(poisson_binomial_pmf_dp(p))


def midpoint_concavity(pairs: int = 100, n: int = 16, seed: int = DEFAULT_SEED) -> StructureResult:
    """H(W_{(p+q)/2}) >= (H(W_p) + H(W_q))/2 on seeded pairs of equal length."""
    rng = np.random.default_rng(seed)
    bad, worst = 0, math.inf
    for _ in range(pairs):
        a, b = rng.random(n), rng.random(n)
        lhs = _entropy_of(BernoulliVector(tuple(0.5 * (a + b))))
        rhs = 0.5 * (_entropy_of(BernoulliVector(tuple(a))) + _entropy_of(BernoulliVector(tuple(b))))
        c = lower_check("midpoint_concavity", lhs, rhs)
        bad += not c.holds
        worst = min(worst, c.margin)
    return StructureResult("midpoint_concavity", pairs, bad, worst)


def binomial_entropy_domination(lams=(0.5, 1.0, 2.0, 5.0), ns=range(2, 65)) -> StructureResult:
    """H(binomial(n, lambda/n)) <= H(Poisson(lambda))."""
    bad, worst, count = 0, math.inf, 0
    for lam in lams:
        hz = shannon_entropy(poisson_law(lam))
        for n in ns:
            if lam > n:
                continue
            hw = _entropy_of(BernoulliVector.equal(n, lam / n))
            c = upper_check("entropy_domination", hw, hz)
            count += 1
            bad += not c.holds
            worst = min(worst, c.margin)
    return StructureResult("binomial_entropy_domination", count, bad, worst)


def convolution_pairs(pairs: int = 100, max_n: int = 12, seed: int = DEFAULT_SEED) -> StructureResult:
    rng = np.random.default_rng(seed + 1)
    bad, worst, count = 0, math.inf, 0
    for _ in range(pairs):
        pa = BernoulliVector(tuple(rng.random(int(rng.integers(1, max_n + 1)))))
        pb = BernoulliVector(tuple(rng.random(int(rng.integers(1, max_n + 1)))))
        for c in convolution_subadditivity(pa, pb):
            count += 1
            bad += not c.holds
            worst = min(worst, c.margin / max(1.0, abs(c.rhs)))
    return StructureResult("convolution_subadditivity", count, bad, worst)


def entropy_structure_checks(seed: int = DEFAULT_SEED) -> list[StructureResult]:
    return [midpoint_concavity(seed=seed), binomial_entropy_domination()]


@dataclass
class SaddleSuiteResult:
    instances: int
    bracket_checked: int = 0
    bracket_failures: int = 0
    refinement_checked: int = 0
    refinement_failures: int = 0
    modulus_checked: int = 0
    modulus_failures: int = 0
    integral_checked: int = 0
    integral_failures: int = 0
    tail_checked: int = 0
    tail_failures: int = 0

    @property
    def holds(self) -> bool:
        return not (self.bracket_failures or self.refinement_failures or self.modulus_failures
                    or self.integral_failures or self.tail_failures)


def default_saddle_vectors(seed: int = DEFAULT_SEED, random_count: int = 3) -> list[BernoulliVector]:
    rng = np.random.default_rng(seed + 2)
    out = [BernoulliVector.equal(400, 0.5), BernoulliVector.equal(500, 0.5), BernoulliVector.equal(800, 0.5),
           BernoulliVector.equal(600, 0.3), BernoulliVector.equal(60, 0.2),
           BernoulliVector(tuple(rng.random(40)))]
    for _ in range(random_count):
        # uniform draws give lambda - lambda_2 close to n/6, comfortably above 100
        out.append(BernoulliVector(tuple(rng.random(int(rng.integers(700, 1200))))))
    return out


def saddle_checks(vectors=None) -> SaddleSuiteResult:
    """Bracket containment for every k, and the near-mean refinements and lower bounds where applicable."""
    if vectors is None:
        vectors = default_saddle_vectors()
    res = SaddleSuiteResult(len(vectors))
    for p in vectors:
        pmf = poisson_binomial_pmf_dp(p)
        for k in range(p.n_ones + 1, p.n_effective):
            sol = saddle.solve_saddle(p, k)
            lo, hi = sol.bracket
            res.bracket_checked += 1
            res.bracket_failures += not (lo - 1e-12 * max(1.0, lo) <= sol.r <= hi + 1e-12 * max(1.0, hi))
            ref = saddle.saddle_bracket_refinement(p, k)
            if ref.applicable:
                res.refinement_checked += 1
                res.refinement_failures += not ref.holds
            for c, attr in ((saddle.saddle_log_modulus_check(p, k), "modulus"),
                            (saddle.contour_integral_lower_check(p, k), "integral"),
                            (saddle.tail_pmf_lower_check(p, k, pmf), "tail")):
                if c.applicable:
                    setattr(res, f"{attr}_checked", getattr(res, f"{attr}_checked") + 1)
                    setattr(res, f"{attr}_failures", getattr(res, f"{attr}_failures") + (not c.holds))
    return res


# ---------------------------------------------------------------------------
# serialization


def _alpha_cols(prefix: str, alphas) -> list[str]:
    return [f"{prefix}_{fmt(float(a))}" for a in alphas]


def sweep_columns(alphas=DEFAULT_ALPHAS) -> list[str]:
    vajda = [a for a in alphas if a >= 1]
    return (["index", "family", "seed", "n", "lam", "lam2", "F", "Q", "precision_mode", "tv", "kl", "chi2"]
            + _alpha_cols("renyi", alphas) + _alpha_cols("tsallis", alphas) + _alpha_cols("vajda", vajda)
            + ["h_w", "h_z", "h2_z", "entropy_diff", "truncation_tail_budget",
               "checks_applicable", "checks_violated", "violated", "error"])


def sweep_row(rec: SweepRecord, alphas=DEFAULT_ALPHAS) -> list[str]:
    rep = rec.report
    seed = rec.family.seed
    row = [fmt(rec.index), rec.family.family_id, "" if seed is None else str(seed), fmt(rec.n),
           fmt(rec.lam), fmt(rec.lam2), fmt(rec.big_f), fmt(rec.q), rec.precision_mode]
    if rep is None:
        nval = 3 + 2 * len(alphas) + len([a for a in alphas if a >= 1]) + 5
        row += [""] * nval
    else:
        row += [fmt(rep.tv), fmt(rep.kl), fmt(rep.chi2)]
        row += [fmt(rep.renyi[float(a)]) for a in alphas]
        row += [fmt(rep.tsallis[float(a)]) for a in alphas]
        row += [fmt(rep.vajda[float(a)]) for a in alphas if a >= 1]
        row += [fmt(rep.h_w), fmt(rep.h_z), fmt(rep.h2_z), fmt(rep.entropy_diff), fmt(rep.truncation_tail_budget)]
    viol = rec.violations
    row += [fmt(sum(c.applicable for c in rec.checks)), fmt(len(viol)), ";".join(c.name for c in viol), rec.error]
    return row


def write_table(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def sweep_csv(records, alphas=DEFAULT_ALPHAS) -> str:
    return write_table(sweep_columns(alphas), (sweep_row(r, alphas) for r in records))


CHECK_COLUMNS = ["index", "family", "name", "side", "applicable", "lhs", "rhs", "lower_rhs", "margin",
                 "holds", "precision_mode", "note"]


def checks_csv(records) -> str:
    rows = []
    for rec in records:
        for c in rec.checks:
            rows.append([rec.index, rec.family.family_id, c.name, c.side, c.applicable, c.lhs, c.rhs, c.lower_rhs,
                         c.margin, c.holds, c.precision_mode, c.note])
    return write_table(CHECK_COLUMNS, rows)


def constants_csv(reports) -> str:
    return write_table(["name", "min_ratio", "argmin", "max_ratio", "argmax", "count"],
                       ([r.name, r.min_ratio, r.argmin, r.max_ratio, r.argmax, r.count] for r in reports))


def record_dict(rec: SweepRecord) -> dict:
    return {
        "index": rec.index,
        "family": rec.family.family_id,
        "seed": rec.family.seed,
        "n": rec.n,
        "lam": rec.lam,
        "lam2": rec.lam2,
        "F": rec.big_f,
        "Q": rec.q,
        "precision_mode": rec.precision_mode,
        "report": None if rec.report is None else rec.report.as_dict(),
        "checks": [c.as_row() for c in rec.checks],
        "ratios": [{"name": r.name, "value": r.value, "alpha": r.alpha, "note": r.note} for r in rec.ratios],
        "error": rec.error,
    }


def sweep_json(records) -> str:
    return json.dumps({"schema": 1, "records": [record_dict(r) for r in records]}, indent=1, sort_keys=True) + "\n"


# keep log_factorial importable from here for table builders
__all__ = [name for name in globals() if not name.startswith("_")] + ["log_factorial"]


# ---------------------------------------------------------------------------
# verification suites

SUITES = ("core", "asymptotic", "structure", "all")


@dataclass
class SuiteOutcome:
    """Summary rows (suite, check, count, failures, detail) plus named CSV tables."""

    rows: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(int(r[3]) for r in self.rows)

    def summary_csv(self) -> str:
        return write_table(["suite", "check", "count", "failures", "detail"], self.rows)


def _core_suite(out: SuiteOutcome, seed: int, workers: int, alphas):
    recs = run_sweep(default_corpus(seed), alphas, workers=workers)
    errors = [r for r in recs if r.error]
    viol = [c for r in recs for c in r.violations]
    applicable = sum(c.applicable for r in recs for c in r.checks)
    out.rows.append(["core", "corpus_bound_checks", applicable, len(viol),
                     ";".join(sorted({c.name for c in viol}))])
    out.rows.append(["core", "corpus_instances", len(recs), len(errors), ""])
    out.tables["sweep.csv"] = sweep_csv(recs, alphas)
    out.tables["checks.csv"] = checks_csv(recs)
    out.tables["constants.csv"] = constants_csv(empirical_constants(recs))


def _asymptotic_suite(out: SuiteOutcome):
    bv = bv_limit_check()
    asserted = [r for r in bv if r.asserted]
    out.rows.append(["asymptotic", "bv_limit", len(asserted), sum(not r.holds for r in asserted), ""])
    out.tables["bv_limit.csv"] = write_table(
        ["lam", "n", "lam6_lam2", "ratio", "asserted", "holds"],
        ([r.lam, r.n, r.lam6_lam2, r.ratio, r.asserted, r.holds] for r in bv))
    tab = degenerate_asymptotics_check()
    out.rows.append(["asymptotic", "degenerate_theta_window", tab.n_max, int(not tab.theta_ok),
                     "" if tab.theta_ok else f"first failure n={tab.theta_first_failure}"])
    out.rows.append(["asymptotic", "degenerate_regime_envelopes", tab.n_max, int(not tab.envelope_ok), ""])
    out.rows.append(["asymptotic", "degenerate_q_kl_formula", tab.n_max, int(not tab.q_kl_formula_ok), ""])
    out.rows.append(["asymptotic", "degenerate_chi2_ratio_0.9_1.1", tab.n_max - 99,
                     int(not (tab.chi2_loose_ok and tab.chi2_ratio_monotone)),
                     f"min={fmt(tab.chi2_ratio_min)} max={fmt(tab.chi2_ratio_max)}"])
    out.rows.append(["asymptotic", "degenerate_closed_form_cross_check", 200,
                     int(tab.cross_check_max_rel > 1e-10), f"max_rel={fmt(tab.cross_check_max_rel)}"])
    out.tables["degenerate.csv"] = write_table(
        list(tab.rows[0].keys()), ([r[k] for k in tab.rows[0]] for r in tab.rows))


def _structure_suite(out: SuiteOutcome, seed: int):
    for res in entropy_structure_checks(seed) + [convolution_pairs(seed=seed)]:
        out.rows.append(["structure", res.name, res.count, res.violations, f"worst_margin={fmt(res.worst_margin)}"])
    sad = saddle_checks()
    out.rows.append(["structure", "saddle_bracket", sad.bracket_checked, sad.bracket_failures, ""])
    out.rows.append(["structure", "saddle_refinement", sad.refinement_checked, sad.refinement_failures, ""])
    out.rows.append(["structure", "saddle_log_modulus", sad.modulus_checked, sad.modulus_failures, ""])
    out.rows.append(["structure", "contour_integral_lower", sad.integral_checked, sad.integral_failures, ""])
    out.rows.append(["structure", "tail_pmf_lower", sad.tail_checked, sad.tail_failures, ""])


def run_suite(suite: str, seed: int = DEFAULT_SEED, workers: int = 1, alphas=DEFAULT_ALPHAS) -> SuiteOutcome:
    if suite not in SUITES:
        raise InputError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    out = SuiteOutcome()
    if suite in ("core", "all"):
        _core_suite(out, seed, workers, alphas)
    if suite in ("asymptotic", "all"):
        _asymptotic_suite(out)
    if suite in ("structure", "all"):
        _structure_suite(out, seed)
    return out
