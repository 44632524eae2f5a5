"""Saddle radius, contour-integral evaluation and tail lower bounds.

P{W=k} = R_k(r) I_k(r) for every r > 0, with R_k(r) = r^-k prod(q + p r)
and I_k(r) the normalised contour integral.  At the saddle radius r(k),
solving F(r) = sum p r / (q + p r) = k, the integrand of I_k is
non-oscillating near theta = 0 and the trapezoid rule converges
spectrally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .distributions import EXACT_FINITE, BernoulliVector, LogPmf
from .errors import DegenerateInstanceError, NoSolutionError, ResolutionError
from .precision import DEFAULT_POLICY, PrecisionPolicy, csum

F_TOL = 1e-12
QUAD_AGREE = 1e-12
QUAD_FAIL = 1e-9
MAX_DOUBLINGS = 8
SIX_FIFTHS = 6.0 / 5.0


@dataclass(frozen=True)
class _Reduced:
    vals: np.ndarray
    counts: np.ndarray
    ones: int
    lam: float
    var: float
    n_eff: int


def _reduce(p: BernoulliVector) -> _Reduced:
    vals, counts = p.unique_counts()
    if vals.size == 0:
        raise DegenerateInstanceError("all probabilities are 0 or 1; the saddle equation has no interior solution")
    return _Reduced(vals, counts, p.n_ones, p.lam, p.variance, p.n_effective)


def saddle_f(p: BernoulliVector, r: float) -> float:
    """F(r) = sum_l p_l r / (q_l + p_l r) (ones contribute 1 each)."""
    red = _reduce(p)
    return red.ones + _f_red(red, r)


def saddle_f_prime(p: BernoulliVector, r: float) -> float:
    """F'(r) = sum_l p_l q_l / (q_l + p_l r)^2."""
    return _fp_red(_reduce(p), r)


def _f_red(red: _Reduced, r: float) -> float:
    x = red.vals
    return csum(red.counts * (x * r) / ((1.0 - x) + x * r))


def _fp_red(red: _Reduced, r: float) -> float:
    x = red.vals
    return csum(red.counts * x * (1.0 - x) / ((1.0 - x) + x * r) ** 2)


def _log_rk(red: _Reduced, r: float, k: int) -> float:
    x = red.vals
    kk = k - red.ones
    if r == 0.0:
        return csum(red.counts * np.log1p(-x))
    terms = list(red.counts * np.log((1.0 - x) + x * r))
    terms.append(-kk * math.log(r))
    return csum(terms)


@dataclass(frozen=True)
class SaddleSolution:
    k: int
    r: float
    f_at_r: float
    f_prime_at_r: float
    bracket: tuple
    log_r_k: float
    iterations: int
    bisections: int

    @property
    def r_k_value(self) -> float:
        try:
            return math.exp(self.log_r_k)
        except OverflowError:
            return math.inf


def mean_shift_lower_radius(lam: float, var: float, k: float) -> float:
    """1 + (k - lambda)/(lambda - lambda_2): a lower bound on r(k) from convexity of F^-1."""
    return 1.0 + (k - lam) / var


def solve_saddle(p: BernoulliVector, k: int) -> SaddleSolution:
    """Solve F(r) = k by Newton's method safeguarded with bisection.

    F is increasing and concave, so Newton iterates started below the root
    stay below it and increase monotonically; any iterate leaving the
    bracket is replaced by a bisection step.
    """
    red = _reduce(p)
    k = int(k)
    if k >= red.n_eff:
        raise NoSolutionError(f"k={k} >= number of positive probabilities ({red.n_eff}); F(r) < k for all r")
    kk = k - red.ones
    if kk < 0:
        raise NoSolutionError(f"k={k} is below the {red.ones} certain successes; P{{W=k}} = 0")
    tol = F_TOL * max(1.0, k)
    if kk == 0:
        return SaddleSolution(k, 0.0, float(red.ones), _fp_red(red, 0.0), (0.0, 0.0), _log_rk(red, 0.0, k), 0, 0)

    lam, var = red.lam, red.var
    low = max(0.0, mean_shift_lower_radius(lam, var, k))
    if k < lam:
        high = 1.0
    elif k == lam:
        low = high = 1.0
    else:
        gap = (k - lam) / var
        high = 1.0 / (1.0 - gap) if gap < 1.0 else 2.0
        while red.ones + _f_red(red, high) < k:
            low = max(low, high)
            high *= 2.0
    bracket = (low, high)

    r = low
    lo, hi = 0.0, high
    iters = 0
    bis = 0
    fr = red.ones + _f_red(red, r)
    while iters < 200 and abs(fr - k) > tol:
        iters += 1
        if fr < k:
            lo = max(lo, r)
        else:
            hi = min(hi, r)
        fp = _fp_red(red, r)
        nxt = r + (k - fr) / fp if fp > 0 else math.nan
        if not (lo <= nxt <= hi):
            nxt = 0.5 * (lo + hi)
            bis += 1
        if nxt == r:
            break
        r = nxt
        fr = red.ones + _f_red(red, r)
    # polish to machine precision; accept a step only if the residual shrinks
    for _ in range(3):
        fp = _fp_red(red, r)
        nxt = r + (k - fr) / fp
        fn = red.ones + _f_red(red, nxt)
        if abs(fn - k) < abs(fr - k):
            r, fr = nxt, fn
        else:
            break
    if abs(fr - k) > tol:
        raise NoSolutionError(f"saddle solve did not reach |F(r)-k| <= {tol:g} (residual {abs(fr - k):g})")
    return SaddleSolution(k, r, fr, _fp_red(red, r), bracket, _log_rk(red, r, k), iters, bis)


@dataclass(frozen=True)
class BracketRefinement:
    k: int
    applicable: bool
    r: float | None = None
    within: bool | None = None
    b1: float | None = None
    b2: float | None = None
    b1_ok: bool | None = None
    b2_ok: bool | None = None

    @property
    def holds(self) -> bool:
        return (not self.applicable) or bool(self.within and self.b1_ok and self.b2_ok)


def saddle_bracket_refinement(p: BernoulliVector, k: int) -> BracketRefinement:
    """Check 5/6 <= r(k) <= 6/5 and back-solve both expansion coefficients.

    Applicable when |k - lambda| <= (lambda - lambda_2)/6.  The expansions
      r = 1 + (6/5)^2 b1 (k - lam)/var
      r = 1 + (k - lam)/var + (6/5)^9 b2 (lam2 - lam3)/var ((k - lam)/var)^2
    must admit b1, b2 in [0, 1].
    """
    red = _reduce(p)
    lam, var = red.lam, red.var
    if abs(k - lam) > var / 6.0 or k >= red.n_eff or k < red.ones:
        return BracketRefinement(k, False)
    sol = solve_saddle(p, k)
    r = sol.r
    within = 5.0 / 6.0 <= r <= 6.0 / 5.0
    x = red.vals
    l2_minus_l3 = csum(red.counts * x * x * (1.0 - x))
    d = (k - lam) / var
    # uncertainty of r from the F-tolerance, propagated into the back-solves
    r_err = F_TOL * max(1.0, k) / sol.f_prime_at_r + 4 * np.finfo(float).eps * r
    if k == lam:
        b1 = b2 = 0.0
        e1 = e2 = 0.0
    else:
        den1 = SIX_FIFTHS**2 * d
        b1 = (r - 1.0) / den1
        e1 = r_err / abs(den1)
        den2 = SIX_FIFTHS**9 * (l2_minus_l3 / var) * d * d
        b2 = (r - 1.0 - d) / den2
        e2 = (r_err + 4 * np.finfo(float).eps * (1 + abs(d))) / abs(den2)
    return BracketRefinement(
        k, True, r, within, b1, b2,
        -e1 <= b1 <= 1.0 + e1,
        -e2 <= b2 <= 1.0 + e2,
    )


@dataclass(frozen=True)
class ContourEstimate:
    k: int
    r: float
    log_r_k: float
    i_k1: float
    i_k2: float
    i_k2_abs_bound: float
    node_count: int
    log_probability: float

    @property
    def i_k(self) -> float:
        return self.i_k1 + self.i_k2

    @property
    def probability(self) -> float:
        return math.exp(self.log_probability) if self.log_probability > -math.inf else 0.0


def default_node_count(n: int) -> int:
    m = max(256, 8 * math.ceil(math.sqrt(n)))
    return 4 * math.ceil(m / 4)


def contour_pmf(p: BernoulliVector, k: int, node_count: int | None = None,
                policy: PrecisionPolicy = DEFAULT_POLICY) -> ContourEstimate:
    """P{W=k} by trapezoid quadrature of the contour integral at the saddle radius."""
    sol = solve_saddle(p, k)
    red = _reduce(p)
    if sol.r == 0.0:
        return ContourEstimate(k, 0.0, sol.log_r_k, 0.5, 0.5, 0.5, 0, sol.log_r_k)
    kk = k - red.ones
    nodes = default_node_count(p.n) if node_count is None else 4 * math.ceil(node_count / 4)
    prev = kernels.contour_trapezoid(red.vals, red.counts, sol.r, kk, nodes)
    diff = math.inf
    for _ in range(MAX_DOUBLINGS):
        nodes *= 2
        cur = kernels.contour_trapezoid(red.vals, red.counts, sol.r, kk, nodes)
        a, b = prev[0] + prev[1], cur[0] + cur[1]
        diff = abs(a - b) / max(abs(b), 1e-300)
        prev = cur
        if diff <= QUAD_AGREE:
            break
    if diff > QUAD_FAIL:
        raise ResolutionError(f"contour quadrature for k={k} did not converge (relative change {diff:.3g})")
    i1, i2, i2abs = prev
    total = i1 + i2
    if total < 0:
        if total < -1e-12:
            raise ResolutionError(f"negative contour integral {total:g} at k={k}")
        total = 0.0
    log_prob = sol.log_r_k + math.log(total) if total > 0 else -math.inf
    return ContourEstimate(k, sol.r, sol.log_r_k, i1, i2, i2abs, nodes, log_prob)


def contour_pmf_full(p: BernoulliVector, node_count: int | None = None) -> LogPmf:
    """Whole pmf on {0..n} by contour quadrature (non-degenerate instances)."""
    red = _reduce(p)
    logs = np.full(p.n + 1, -np.inf)
    for k in range(red.ones, red.n_eff):
        logs[k] = contour_pmf(p, k, node_count).log_probability
    # top of the support: the saddle radius is infinite, probability is prod p
    logs[red.n_eff] = csum(red.counts * np.log(red.vals))
    return LogPmf(logs, EXACT_FINITE, "contour", 0.0)


@dataclass(frozen=True)
class LowerBoundCheck:
    name: str
    k: int
    applicable: bool
    lhs: float = math.nan
    rhs: float = math.nan
    reason: str = ""

    @property
    def holds(self) -> bool:
        if not self.applicable:
            return True
        return self.lhs >= self.rhs - 1e-12 * max(1.0, abs(self.lhs), abs(self.rhs))


def _near_mean(p: BernoulliVector, k: int) -> tuple[bool, str]:
    var = p.variance
    gap = p.lam - k
    if not (0.0 <= gap <= var / 6.0):
        return False, "needs 0 <= lambda - k <= (lambda - lambda_2)/6"
    if p.reduced.size == 0:
        return False, "degenerate instance"
    return True, ""


def tail_pmf_lower_bound(p: BernoulliVector, k: int) -> float | None:
    """exp(-4 (lam-k)^2/var) / (10 sqrt(var)), or None when not applicable.

    Requires var = lambda - lambda_2 >= 100 and 0 <= lambda - k <= var/6.
    """
    var = p.variance
    if var < 100.0:
        return None
    ok, _ = _near_mean(p, k)
    if not ok:
        return None
    return math.exp(-4.0 * (p.lam - k) ** 2 / var) / (10.0 * math.sqrt(var))


def saddle_log_modulus_check(p: BernoulliVector, k: int) -> LowerBoundCheck:
    """log R_k(r(k)) >= -4 (lambda - k)^2 / (lambda - lambda_2)."""
    ok, why = _near_mean(p, k)
    if not ok:
        return LowerBoundCheck("saddle_log_modulus", k, False, reason=why)
    sol = solve_saddle(p, k)
    return LowerBoundCheck("saddle_log_modulus", k, True, sol.log_r_k, -4.0 * (p.lam - k) ** 2 / p.variance)


def contour_integral_lower_check(p: BernoulliVector, k: int) -> LowerBoundCheck:
    """I_k(r(k)) >= 1 / (10 sqrt(lambda - lambda_2)) when lambda - lambda_2 >= 100."""
    var = p.variance
    if var < 100.0:
        return LowerBoundCheck("contour_integral_lower", k, False, reason="needs lambda - lambda_2 >= 100")
    ok, why = _near_mean(p, k)
    if not ok:
        return LowerBoundCheck("contour_integral_lower", k, False, reason=why)
    est = contour_pmf(p, k)
    return LowerBoundCheck("contour_integral_lower", k, True, est.i_k, 1.0 / (10.0 * math.sqrt(var)))


def tail_pmf_lower_check(p: BernoulliVector, k: int, pmf: LogPmf) -> LowerBoundCheck:
    bound = tail_pmf_lower_bound(p, k)
    if bound is None:
        return LowerBoundCheck("tail_pmf_lower", k, False, reason="outside the near-mean window or variance < 100")
    return LowerBoundCheck("tail_pmf_lower", k, True, float(pmf.probabilities()[k]), bound)
