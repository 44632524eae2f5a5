"""Informational distances between a discrete law and a (Poisson) reference.

Every distance is written as a sum over k of nonnegative (or sign-definite)
terms in the relative deviation delta_k = w_k / v_k - 1, so nothing cancels:

    D        = sum v h(delta),        h(d)   = (1+d) log(1+d) - d
    T_alpha  = sum v g_a(delta)/(a-1), g_a(d) = (1+d)^a - 1 - a d
    chi_a    = sum v |delta|^a

using sum_k (w_k - v_k) = 0.  Small |delta| goes through the Taylor series
of h and g_a.  Mass of the reference beyond the support of w enters with
delta = -1; for Poisson references it is the exact upper tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.special import binom, logsumexp

from .distributions import (
    EXACT_FINITE,
    TRUNCATED,
    UNDERFLOW_GUARD,
    BernoulliVector,
    LogPmf,
    poisson_binomial_pmf_dp,
    poisson_log_pmf_array,
)
from .errors import EscalationError, InputError
from .precision import DEFAULT_POLICY, PrecisionPolicy, csum, mp_csum

DEFAULT_ALPHAS = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0)
SERIES_CUTOFF = 0.1
SERIES_TERMS = 24
EXP_LIMIT = 600.0
CHI2_ESCALATE = 1e12


@dataclass(frozen=True)
class TruncationPolicy:
    """How far infinite Poisson sums are carried.

    Sums stop at the first K whose ratio-test tail bound
    v_K (lam/(K+1)) / (1 - lam/(K+1)) is below ``tail_epsilon``, and never
    past ``hard_cap`` (default lam + 50 sqrt(lam + 1) + 200).
    """

    tail_epsilon: float = 1e-15
    hard_cap: int | None = None

    def __post_init__(self):
        if not self.tail_epsilon > 0:
            raise InputError("tail_epsilon must be positive")

    def cap(self, lam: float) -> int:
        if self.hard_cap is not None:
            return int(self.hard_cap)
        return int(math.ceil(lam + 50.0 * math.sqrt(lam + 1.0) + 200.0))

    def doubled(self, lam: float) -> "TruncationPolicy":
        return TruncationPolicy(self.tail_epsilon, 2 * self.cap(lam))


DEFAULT_TRUNCATION = TruncationPolicy()


def _ratio_tail_bound(log_vk: float, lam: float, k: int) -> float:
    rho = lam / (k + 1.0)
    if rho >= 1.0:
        return math.inf
    return math.exp(log_vk) * rho / (1.0 - rho)


def poisson_law(lam: float, min_len: int = 1, truncation: TruncationPolicy = DEFAULT_TRUNCATION,
                policy: PrecisionPolicy = DEFAULT_POLICY) -> LogPmf:
    """Poisson(lam) pmf on 0..K with K >= min_len - 1 chosen by ``truncation``."""
    if lam < 0:
        raise InputError("lambda must be nonnegative")
    if lam == 0:
        return LogPmf(np.zeros(1), EXACT_FINITE, "poisson", 0.0, rate=0.0, mass=np.ones(1),
                      mass_mp=(mpmath.mpf(1),) if policy.extended else None)
    cap = max(truncation.cap(lam), min_len - 1)
    ks = np.arange(cap + 1)
    logs = poisson_log_pmf_array(lam, ks)
    start = max(min_len - 1, int(math.floor(lam)))
    last = cap
    bound = math.nan
    for k in range(start, cap + 1):
        b = _ratio_tail_bound(logs[k], lam, k)
        if b < truncation.tail_epsilon:
            last, bound = k, b
            break
    if math.isnan(bound):
        bound = float(mpmath.gammainc(last + 1, 0, lam, regularized=True))
    logs = logs[: last + 1]
    mass = np.exp(logs)
    mass_mp = None
    if policy.extended:
        with policy.workdps():
            lm = mpmath.mpf(lam)
            mass_mp = tuple(mpmath.exp(k * mpmath.log(lm) - lm - mpmath.loggamma(k + 1)) for k in range(last + 1))
            logs = np.array([float(mpmath.log(x)) for x in mass_mp])
    return LogPmf(logs, TRUNCATED, "poisson", bound, rate=float(lam), mass=mass, mass_mp=mass_mp)


# ---------------------------------------------------------------------------
# term-wise machinery


@dataclass
class _Pair:
    w: np.ndarray
    v: np.ndarray
    lw: np.ndarray
    lv: np.ndarray
    delta: np.ndarray
    tail: float  # reference mass beyond the support of w
    singular: bool  # w puts mass where v has none
    flags: list = field(default_factory=list)


def _align(w: LogPmf, v: LogPmf) -> _Pair:
    n1 = len(w)
    wl = np.asarray(w.probabilities(), dtype=np.float64)
    lw = np.asarray(w.log_mass, dtype=np.float64)
    if len(v) < n1:
        if v.rate is not None:
            ext = poisson_law(v.rate, n1, TruncationPolicy(hard_cap=n1 - 1))
            vl, lv = ext.probabilities()[:n1], ext.log_mass[:n1]
        else:
            pad = n1 - len(v)
            vl = np.concatenate([v.probabilities(), np.zeros(pad)])
            lv = np.concatenate([v.log_mass, np.full(pad, -np.inf)])
    else:
        vl = np.asarray(v.probabilities()[:n1], dtype=np.float64)
        lv = np.asarray(v.log_mass[:n1], dtype=np.float64)
    # linear masses below the guard may be rounding debris; the logs are authoritative
    with np.errstate(all="ignore"):
        wl = np.where(wl < UNDERFLOW_GUARD, np.exp(lw), wl)
        vl = np.where(vl < UNDERFLOW_GUARD, np.exp(lv), vl)
    tail = v.upper_tail(n1 - 1)
    singular = bool(np.any(np.isfinite(lw) & np.isneginf(lv)))
    normal = (wl > 1e-290) & (vl > 1e-290)
    with np.errstate(all="ignore"):
        delta = np.where(normal, (wl - vl) / np.where(vl > 0, vl, 1.0), np.expm1(lw - lv))
    delta = np.where(np.isneginf(lw), -1.0, delta)
    pair = _Pair(wl, vl, lw, lv, delta, tail, singular)
    with np.errstate(all="ignore"):
        big = np.nanmax(np.where(np.isfinite(lw), lw - lv, -np.inf)) if n1 else -np.inf
    if big > EXP_LIMIT / 2:
        pair.flags.append("exponent")
    return pair


def _h_series(d: np.ndarray) -> np.ndarray:
    out = np.zeros_like(d)
    pw = d * d
    for m in range(2, SERIES_TERMS + 2):
        out += (1.0 if m % 2 == 0 else -1.0) * pw / (m * (m - 1.0))
        pw = pw * d
    return out


def _g_series(d: np.ndarray, alpha: float) -> np.ndarray:
    out = np.zeros_like(d)
    pw = d * d
    for m in range(2, SERIES_TERMS + 2):
        c = binom(alpha, m)
        if c == 0.0:
            break
        out += c * pw
        pw = pw * d
    return out


def _kl_terms(pr: _Pair) -> np.ndarray:
    small = np.abs(pr.delta) < SERIES_CUTOFF
    with np.errstate(all="ignore"):
        direct = np.where(pr.w > 0, pr.w * (pr.lw - pr.lv), 0.0) - pr.w + pr.v
        ser = pr.v * _h_series(np.where(small, pr.delta, 0.0))
    return np.where(small, ser, direct)


def relative_entropy(w: LogPmf, v: LogPmf) -> float:
    """D(w||v) = sum w log(w/v), with 0 log 0 = 0; inf without absolute continuity."""
    pr = _align(w, v)
    if pr.singular:
        return math.inf
    return max(0.0, csum(_kl_terms(pr)) + pr.tail)


def total_variation(w: LogPmf, v: LogPmf) -> float:
    """d = sum_k |w_k - v_k| (no factor 1/2), reference tail included exactly."""
    pr = _align(w, v)
    return csum(np.abs(pr.w - pr.v)) + pr.tail


def _abs_power_sum(pr: _Pair, alpha: float) -> tuple[float, bool]:
    """sum v |delta|^alpha over the support of w plus the tail; flags overflow."""
    with np.errstate(all="ignore"):
        ad = np.abs(pr.delta)
        logt = np.where(ad > 0, pr.lv + alpha * np.log(ad), -np.inf)
    if np.max(logt, initial=-np.inf) > EXP_LIMIT:
        return float(np.exp(min(logsumexp(logt), 709.0))), True
    return csum(np.exp(logt)) + pr.tail, False


def chi_squared(w: LogPmf, v: LogPmf) -> float:
    """Pearson distance sum (w - v)^2 / v."""
    return vajda_pearson(w, v, 2.0)


def vajda_pearson(w: LogPmf, v: LogPmf, alpha: float) -> float:
    """chi_alpha = sum |w - v|^alpha / v^(alpha-1), alpha >= 1."""
    if alpha < 1:
        raise InputError("Vajda-Pearson distance needs alpha >= 1")
    pr = _align(w, v)
    if pr.singular:
        return math.inf
    val, overflow = _abs_power_sum(pr, alpha)
    if overflow:
        return _escalate_pair(w, v, lambda a, b, t: _mp_vajda(a, b, t, alpha))
    return val


def _power_sum_minus_one(pr: _Pair, alpha: float) -> tuple[float, float | None]:
    """(S - 1, log S) with S = sum w^alpha v^(1-alpha); log S is set when S is huge."""
    with np.errstate(all="ignore"):
        logt = np.where(np.isfinite(pr.lw), alpha * pr.lw + (1.0 - alpha) * pr.lv, -np.inf)
    if np.max(logt, initial=-np.inf) > EXP_LIMIT:
        return math.inf, float(logsumexp(logt))
    small = np.abs(pr.delta) < SERIES_CUTOFF
    with np.errstate(all="ignore"):
        direct = np.exp(logt) - pr.v - alpha * (pr.w - pr.v)
        ser = pr.v * _g_series(np.where(small, pr.delta, 0.0), alpha)
    terms = np.where(small, ser, direct)
    return csum(terms) + (alpha - 1.0) * pr.tail, None


def tsallis(w: LogPmf, v: LogPmf, alpha: float) -> float:
    """T_alpha = (sum (w/v)^alpha v - 1) / (alpha - 1)."""
    _check_alpha(alpha)
    pr = _align(w, v)
    if pr.singular and alpha > 1:
        return math.inf
    s1, logs = _power_sum_minus_one(pr, alpha)
    if logs is not None:
        with mpmath.workdps(30):
            val = (mpmath.exp(logs) - 1) / (alpha - 1)
        if not mpmath.isfinite(val) or val > 1.7e308:
            raise EscalationError(f"T_{alpha} exceeds binary64 range (log S = {logs:.6g})")
        return float(val)
    return s1 / (alpha - 1.0)


def renyi(w: LogPmf, v: LogPmf, alpha: float) -> float:
    """D_alpha = log(sum (w/v)^alpha v) / (alpha - 1)."""
    _check_alpha(alpha)
    pr = _align(w, v)
    if pr.singular and alpha > 1:
        return math.inf
    s1, logs = _power_sum_minus_one(pr, alpha)
    if logs is not None:
        return logs / (alpha - 1.0)
    return math.log1p(s1) / (alpha - 1.0)


def _check_alpha(alpha: float):
    if alpha <= 0:
        raise InputError("alpha must be positive")
    if alpha == 1:
        raise InputError("alpha = 1 is the relative entropy; call relative_entropy")


def shannon_entropy(pmf: LogPmf) -> float:
    """-sum p log p over the stored support."""
    m = pmf.probabilities()
    lg = pmf.log_mass
    pos = m > 0
    return max(0.0, -csum(m[pos] * lg[pos]))


def second_log_moment(pmf: LogPmf) -> float:
    """(sum p (log p)^2)^(1/2) over the stored support."""
    m = pmf.probabilities()
    lg = pmf.log_mass
    pos = m > 0
    return math.sqrt(csum(m[pos] * lg[pos] ** 2))


def entropy_tail_budget(pmf: LogPmf) -> tuple[float, float]:
    """Bounds on the omitted contributions to H and to H_2^2 of a truncated Poisson law.

    Beyond the last stored index K the masses are dominated by
    u_j = v_K rho^j, rho = lam/(K+1); x -> -x log x and x (log x)^2 increase
    below e^-2, so the geometric majorant bounds both tails.
    """
    if pmf.support_hint != TRUNCATED or pmf.rate is None or pmf.rate == 0:
        return 0.0, 0.0
    k = len(pmf) - 1
    lv = float(pmf.log_mass[-1])
    # in logs: rho itself underflows for subnormal rates
    log_rho = math.log(pmf.rate) - math.log(k + 1.0)
    if log_rho >= 0.0 or lv + log_rho > -2.0:
        return math.inf, math.inf
    rho = math.exp(log_rho)
    u = math.exp(lv + log_rho)
    a, b = -lv, -log_rho
    s0 = u / (1 - rho)
    s1 = u / (1 - rho) ** 2
    s2 = u * (1 + rho) / (1 - rho) ** 3
    return a * s0 + b * s1, a * a * s0 + 2 * a * b * s1 + b * b * s2


def entropy_difference(w: LogPmf, v_poisson: LogPmf) -> float:
    """H(Z) - H(W)."""
    return shannon_entropy(v_poisson) - shannon_entropy(w)


@dataclass(frozen=True)
class KLDiagnostics:
    negative_part: float
    lower_quadratic: float
    kl: float

    @property
    def negative_part_ok(self) -> bool:
        return self.negative_part <= 1.0 + 1e-12

    @property
    def quadratic_ok(self) -> bool:
        return self.lower_quadratic <= self.kl + 1e-12 * max(1.0, self.kl)


def kl_diagnostics(w: LogPmf, v: LogPmf) -> KLDiagnostics:
    """Negative part of the KL sum (at most 1) and the quadratic lower bound on D.

    negative_part   = -sum_{w_k < v_k} w_k log(w_k / v_k)
    lower_quadratic = 1/2 sum (w_k - v_k)^2 / max(w_k, v_k)
    """
    pr = _align(w, v)
    with np.errstate(all="ignore"):
        neg_mask = (pr.w < pr.v) & np.isfinite(pr.lw)
        neg = -csum(pr.w[neg_mask] * (pr.lw[neg_mask] - pr.lv[neg_mask]))
        quad = np.where(pr.w >= pr.v, pr.v * pr.v * pr.delta**2 / np.where(pr.w > 0, pr.w, 1.0), pr.v * pr.delta**2)
    lower = 0.5 * (csum(quad) + pr.tail)
    return KLDiagnostics(max(0.0, neg), lower, relative_entropy(w, v))


# ---------------------------------------------------------------------------
# extended precision


def _mp_pair(w: LogPmf, v: LogPmf, digits: int):
    n1 = len(w)
    wm = w.mp_masses(digits)
    with mpmath.workdps(digits):
        if v.rate is not None:
            lam = mpmath.mpf(v.rate)
            if lam == 0:
                vm = [mpmath.mpf(1)] + [mpmath.mpf(0)] * (n1 - 1)
                tail = mpmath.mpf(0)
            else:
                vm = [mpmath.exp(k * mpmath.log(lam) - lam - mpmath.loggamma(k + 1)) for k in range(n1)]
                tail = mpmath.gammainc(n1, 0, lam, regularized=True)
        else:
            vm = v.mp_masses(digits)[:n1]
            vm += [mpmath.mpf(0)] * (n1 - len(vm))
            tail = mp_csum(v.mp_masses(digits)[n1:]) + v.tail_bound
    return wm, vm, tail


def _mp_kl(wm, vm, tail):
    return mp_csum([a * mpmath.log(a / b) for a, b in zip(wm, vm) if a > 0])


def _mp_vajda(wm, vm, tail, alpha):
    return mp_csum([abs(a - b) ** alpha / b ** (alpha - 1) for a, b in zip(wm, vm) if b > 0]) + tail


def _mp_power_sum(wm, vm, alpha):
    return mp_csum([a**alpha * b ** (1 - alpha) for a, b in zip(wm, vm) if a > 0])


def _escalate_pair(w: LogPmf, v: LogPmf, fn, digits: int = 50) -> float:
    wm, vm, tail = _mp_pair(w, v, digits)
    with mpmath.workdps(digits):
        val = fn(wm, vm, tail)
    out = float(val)
    if not math.isfinite(out):
        raise EscalationError("extended-precision value is outside binary64 range")
    return out


# ---------------------------------------------------------------------------
# full report


@dataclass(frozen=True)
class DivergenceReport:
    tv: float
    kl: float
    chi2: float
    renyi: dict
    tsallis: dict
    vajda: dict
    h_w: float
    h_z: float
    h2_z: float
    entropy_diff: float
    truncation_tail_budget: float
    precision_mode: str = "binary64"
    escalated: bool = False

    def as_dict(self) -> dict:
        return {
            "tv": self.tv,
            "kl": self.kl,
            "chi2": self.chi2,
            "renyi": {str(a): x for a, x in self.renyi.items()},
            "tsallis": {str(a): x for a, x in self.tsallis.items()},
            "vajda": {str(a): x for a, x in self.vajda.items()},
            "h_w": self.h_w,
            "h_z": self.h_z,
            "h2_z": self.h2_z,
            "entropy_diff": self.entropy_diff,
            "truncation_tail_budget": self.truncation_tail_budget,
            "precision_mode": self.precision_mode,
            "escalated": self.escalated,
        }


def zero_report(alphas=DEFAULT_ALPHAS, precision_mode: str = "binary64") -> DivergenceReport:
    z = {float(a): 0.0 for a in alphas}
    return DivergenceReport(0.0, 0.0, 0.0, dict(z), dict(z), {a: 0.0 for a in z if a >= 1}, 0.0, 0.0, 0.0, 0.0, 0.0,
                            precision_mode)


def compare(w: LogPmf, v: LogPmf, alphas=DEFAULT_ALPHAS, policy: PrecisionPolicy = DEFAULT_POLICY) -> DivergenceReport:
    """Every distance between ``w`` and reference ``v``.

    Runs in binary64 and re-runs in extended precision when chi^2 > 1e12 or
    an intermediate exponent leaves the safe range.
    """
    if policy.extended:
        return _compare_mp(w, v, alphas, policy.extended_digits)
    pr = _align(w, v)
    if pr.flags:
        return _compare_mp(w, v, alphas, policy.extended_digits, escalated=True)
    try:
        kl = relative_entropy(w, v)
        chi2 = chi_squared(w, v)
        renyi_d, tsallis_d, vajda_d = {}, {}, {}
        for a in alphas:
            a = float(a)
            if a == 1.0:
                renyi_d[a] = tsallis_d[a] = kl
            else:
                renyi_d[a] = renyi(w, v, a)
                tsallis_d[a] = tsallis(w, v, a)
            if a >= 1.0:
                vajda_d[a] = total_variation(w, v) if a == 1.0 else vajda_pearson(w, v, a)
    except EscalationError:
        return _compare_mp(w, v, alphas, policy.extended_digits, escalated=True)
    if chi2 > CHI2_ESCALATE or not all(map(math.isfinite, [kl, chi2, *renyi_d.values(), *tsallis_d.values()])):
        return _compare_mp(w, v, alphas, policy.extended_digits, escalated=True)
    h_budget, h2sq_budget = entropy_tail_budget(v)
    h_w = shannon_entropy(w)
    h_z = shannon_entropy(v)
    h2 = second_log_moment(v)
    h2_budget = h2sq_budget / (2 * h2) if h2 > 0 else math.sqrt(h2sq_budget)
    return DivergenceReport(
        tv=total_variation(w, v), kl=kl, chi2=chi2, renyi=renyi_d, tsallis=tsallis_d, vajda=vajda_d,
        h_w=h_w, h_z=h_z, h2_z=h2, entropy_diff=h_z - h_w,
        truncation_tail_budget=max(h_budget, h2_budget) + v.tail_bound,
    )


def _compare_mp(w: LogPmf, v: LogPmf, alphas, digits: int, escalated: bool = False) -> DivergenceReport:
    wm, vm, tail = _mp_pair(w, v, digits)
    with mpmath.workdps(digits):
        kl = _mp_kl(wm, vm, tail)
        chi2 = _mp_vajda(wm, vm, tail, 2)
        tv = mp_csum([abs(a - b) for a, b in zip(wm, vm)]) + tail
        renyi_d, tsallis_d, vajda_d = {}, {}, {}
        for a in alphas:
            a = float(a)
            if a == 1.0:
                renyi_d[a] = tsallis_d[a] = kl
            else:
                s = _mp_power_sum(wm, vm, mpmath.mpf(a))
                renyi_d[a] = mpmath.log(s) / (a - 1)
                tsallis_d[a] = (s - 1) / (a - 1)
            if a >= 1.0:
                vajda_d[a] = tv if a == 1.0 else _mp_vajda(wm, vm, tail, mpmath.mpf(a))
        h_w = -mp_csum([a * mpmath.log(a) for a in wm if a > 0])
        vfull = v.mp_masses(digits) if v.mass_mp is not None else [
            mpmath.exp(mpmath.mpf(x)) for x in v.log_mass if np.isfinite(x)]
        h_z = -mp_csum([b * mpmath.log(b) for b in vfull if b > 0])
        h2 = mpmath.sqrt(mp_csum([b * mpmath.log(b) ** 2 for b in vfull if b > 0]))
        vals = dict(tv=tv, kl=kl, chi2=chi2, h_w=h_w, h_z=h_z, h2=h2)
        out = {k: float(x) for k, x in vals.items()}
        renyi_f = {a: float(x) for a, x in renyi_d.items()}
        tsallis_f = {a: float(x) for a, x in tsallis_d.items()}
        vajda_f = {a: float(x) for a, x in vajda_d.items()}
    if not all(map(math.isfinite, [*out.values(), *tsallis_f.values()])):
        raise EscalationError("extended-precision distances exceed binary64 range")
    h_budget, h2sq_budget = entropy_tail_budget(v)
    h2_budget = h2sq_budget / (2 * out["h2"]) if out["h2"] > 0 else math.sqrt(h2sq_budget)
    return DivergenceReport(
        tv=out["tv"], kl=out["kl"], chi2=out["chi2"], renyi=renyi_f, tsallis=tsallis_f, vajda=vajda_f,
        h_w=out["h_w"], h_z=out["h_z"], h2_z=out["h2"], entropy_diff=out["h_z"] - out["h_w"],
        truncation_tail_budget=max(h_budget, h2_budget) + v.tail_bound,
        precision_mode="extended", escalated=escalated,
    )


@dataclass(frozen=True)
class Instance:
    """A Bernoulli vector with its pmf, matched Poisson law and distances."""

    p: BernoulliVector
    w: LogPmf
    v: LogPmf
    report: DivergenceReport


def evaluate(p: BernoulliVector, alphas=DEFAULT_ALPHAS, policy: PrecisionPolicy = DEFAULT_POLICY,
             truncation: TruncationPolicy = DEFAULT_TRUNCATION) -> Instance:
    """pmf of W, the matched Poisson law, and the full divergence report."""
    if p.lam == 0:
        w = poisson_binomial_pmf_dp(p, policy)
        v = poisson_law(0.0, policy=policy)
        return Instance(p, w, v, zero_report(alphas, policy.mode))
    w = poisson_binomial_pmf_dp(p, policy)
    v = poisson_law(p.lam, p.n + 1, truncation, policy)
    return Instance(p, w, v, compare(w, v, alphas, policy))


def divergence_report(p: BernoulliVector, alphas=DEFAULT_ALPHAS, policy: PrecisionPolicy = DEFAULT_POLICY,
                      truncation: TruncationPolicy = DEFAULT_TRUNCATION) -> DivergenceReport:
    return evaluate(p, alphas, policy, truncation).report
