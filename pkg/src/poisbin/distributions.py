"""Poisson-binomial and Poisson probability functions.

The reference pmf is the iterated two-term convolution over the sorted
probabilities; the DFT inversion of the generating polynomial and the literal
enumeration over 0-1 sequences serve as cross-checks.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property


import mpmath
import numpy as np
from scipy.special import expit, gammainc

from . import kernels
from .errors import InputError, ProbabilityFileError, SizeLimitError, UnderResolutionError
from .precision import DEFAULT_POLICY, PrecisionPolicy, csum, log_factorial, mp_csum

EXACT_FINITE = "exact-finite"
TRUNCATED = "truncated"
METHOD_TAGS = ("dp", "dft", "contour", "poisson", "bruteforce")

BRUTEFORCE_MAX_N = 20


@dataclass(frozen=True)
class BernoulliVector:
    """Success probabilities p_1..p_n of independent Bernoulli summands."""

    p: tuple

    def __post_init__(self):
        vals = tuple(float(x) for x in np.asarray(self.p, dtype=np.float64).ravel())
        if len(vals) < 1:
            raise InputError("need at least one probability")
        for j, x in enumerate(vals):
            if not (0.0 <= x <= 1.0):
                raise InputError(f"p[{j}] = {x!r} is outside [0, 1]")
        object.__setattr__(self, "p", vals)

    @classmethod
    def equal(cls, n: int, p: float) -> "BernoulliVector":
        return cls((p,) * n)

    @classmethod
    def concat(cls, a: "BernoulliVector", b: "BernoulliVector") -> "BernoulliVector":
        return cls(a.p + b.p)

    @property
    def n(self) -> int:
        return len(self.p)

    @cached_property
    def sorted_p(self) -> np.ndarray:
        return np.sort(np.asarray(self.p, dtype=np.float64))

    @cached_property
    def reduced(self) -> np.ndarray:
        """Probabilities strictly inside (0, 1), ascending."""
        s = self.sorted_p
        return s[(s > 0.0) & (s < 1.0)]

    @property
    def n_ones(self) -> int:
        return int(np.count_nonzero(self.sorted_p == 1.0))

    @property
    def n_effective(self) -> int:
        """Number of strictly positive probabilities."""
        return int(np.count_nonzero(self.sorted_p > 0.0))

    @property
    def max_p(self) -> float:
        return float(self.sorted_p[-1])

    @cached_property
    def lam(self) -> float:
        return csum(self.sorted_p)

    @cached_property
    def lam2(self) -> float:
        return csum(self.sorted_p**2)

    @cached_property
    def lam3(self) -> float:
        return csum(self.sorted_p**3)

    @cached_property
    def variance(self) -> float:
        """sum p_j q_j, i.e. lambda - lambda_2 without the cancellation."""
        s = self.sorted_p
        return csum(s * (1.0 - s))

    @property
    def big_f(self) -> float:
        return max(1.0, self.lam) / max(1.0, self.variance)

    @property
    def q_quantity(self) -> float:
        return self.lam / max(1.0, self.variance)

    @property
    def q0_quantity(self) -> float:
        return 1.0 / max(1.0, self.variance)

    @property
    def ratio(self) -> float:
        """lambda_2 / lambda (0 when lambda = 0)."""
        return self.lam2 / self.lam if self.lam > 0 else 0.0

    def unique_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct values of the reduced vector and their multiplicities."""
        vals, counts = np.unique(self.reduced, return_counts=True)
        return vals, counts.astype(np.float64)


@dataclass(frozen=True)
class Moments:
    lam: float
    lam2: float
    lam3: float
    big_f: float
    q: float
    q0: float

    def __iter__(self):
        return iter((self.lam, self.lam2, self.lam3, self.big_f, self.q, self.q0))


def moments(p: BernoulliVector, policy: PrecisionPolicy = DEFAULT_POLICY) -> Moments:
    """(lambda, lambda_2, lambda_3, F, Q, Q_0) of a Bernoulli vector."""
    if not policy.extended:
        return Moments(p.lam, p.lam2, p.lam3, p.big_f, p.q_quantity, p.q0_quantity)
    with policy.workdps():
        ps = [mpmath.mpf(x) for x in p.sorted_p]
        lam = mp_csum(ps)
        lam2 = mp_csum([x * x for x in ps])
        lam3 = mp_csum([x**3 for x in ps])
        var = mp_csum([x * (1 - x) for x in ps])
        den = max(mpmath.mpf(1), var)
        return Moments(
            float(lam), float(lam2), float(lam3),
            float(max(mpmath.mpf(1), lam) / den), float(lam / den), float(1 / den),
        )


@dataclass(frozen=True, eq=False)
class LogPmf:
    """Distribution on {0, 1, ...} stored as log-probabilities.

    ``mass`` keeps the linear values when they were computed directly, so
    callers do not lose accuracy going through exp(log(.)).  ``mass_mp``
    holds extended-precision masses when those exist.
    """

    log_mass: np.ndarray
    support_hint: str = EXACT_FINITE
    method_tag: str = "dp"
    tail_bound: float = 0.0
    rate: float | None = None
    mass: np.ndarray | None = field(default=None, repr=False)
    mass_mp: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.support_hint not in (EXACT_FINITE, TRUNCATED):
            raise InputError(f"unknown support hint {self.support_hint!r}")
        if self.method_tag not in METHOD_TAGS:
            raise InputError(f"unknown method tag {self.method_tag!r}")
        if self.tail_bound < 0:
            raise InputError("tail_bound must be nonnegative")

    @classmethod
    def from_mass(cls, mass, **kw) -> "LogPmf":
        mass = np.asarray(mass, dtype=np.float64)
        with np.errstate(divide="ignore"):
            logs = np.log(mass)
        return cls(log_mass=logs, mass=mass, **kw)

    def __len__(self) -> int:
        return len(self.log_mass)

    def probabilities(self) -> np.ndarray:
        if self.mass is not None:
            return self.mass
        return np.exp(self.log_mass)

    def total_mass(self) -> float:
        return csum(self.probabilities()) + self.tail_bound

    def upper_tail(self, k: int) -> float:
        """P{X > k}; exact for Poisson laws, stored mass plus tail bound otherwise."""
        if self.rate is not None:
            if self.rate == 0.0:
                return 0.0
            return float(gammainc(k + 1, self.rate))
        rest = self.probabilities()[k + 1 :]
        return csum(rest) + self.tail_bound

    def mp_masses(self, digits: int) -> list:
        with mpmath.workdps(digits):
            if self.mass_mp is not None:
                return [mpmath.mpf(x) for x in self.mass_mp]
            return [mpmath.exp(mpmath.mpf(x)) if np.isfinite(x) else mpmath.mpf(0) for x in self.log_mass]


def _mp_convolve(ps, ones: int, length: int):
    w = [mpmath.mpf(1)]
    for x in ps:
        q = 1 - x
        nxt = [w[0] * q]
        for k in range(1, len(w)):
            nxt.append(w[k] * q + w[k - 1] * x)
        nxt.append(w[-1] * x)
        w = nxt
    out = [mpmath.mpf(0)] * ones + w
    out += [mpmath.mpf(0)] * (length - len(out))
    return out


def poisson_binomial_pmf_dp(p: BernoulliVector, policy: PrecisionPolicy = DEFAULT_POLICY) -> LogPmf:
    """Exact pmf on {0..n} by iterated two-term convolution.

    Zeros are dropped, ones become a deterministic shift, and the remaining
    probabilities are convolved in ascending order.
    """
    red = p.reduced
    ones = p.n_ones
    if policy.extended:
        with policy.workdps():
            w = _mp_convolve([mpmath.mpf(x) for x in red], ones, p.n + 1)
            logs = np.array([float(mpmath.log(x)) if x > 0 else -np.inf for x in w])
            mass = np.array([float(x) for x in w])
        return LogPmf(logs, EXACT_FINITE, "dp", 0.0, mass=mass, mass_mp=tuple(w))
    core = kernels.bernoulli_convolve(np.ascontiguousarray(red))
    core_logs = _repair_underflow(red, core)
    mass = np.zeros(p.n + 1)
    mass[ones : ones + core.shape[0]] = core
    logs = np.full(p.n + 1, -np.inf)
    logs[ones : ones + core.shape[0]] = core_logs
    return LogPmf(logs, EXACT_FINITE, "dp", 0.0, mass=mass)


UNDERFLOW_GUARD = 1e-290


def _tilt_for_mean(logit_p: np.ndarray, target: float) -> float:
    """t with sum expit(logit p + t) = target, by bisection (the sum increases in t)."""
    lo, hi = -1500.0, 1500.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(np.sum(expit(logit_p + mid))) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def _repair_underflow(red: np.ndarray, core: np.ndarray) -> np.ndarray:
    """Log-masses of the reduced convolution, exact in log space where binary64 underflowed.

    Entries below ``UNDERFLOW_GUARD`` may be zero or stuck at a subnormal
    value.  They are recomputed from dp runs on exponentially tilted
    probabilities p e^t / (q + p e^t), whose mean sits on the damaged index:
    log w_k = log w'_k - k t + sum log(q + p e^t).
    """
    with np.errstate(divide="ignore"):
        logs = np.log(core)
    bad = core < UNDERFLOW_GUARD
    m = core.shape[0] - 1
    if not bad.any():
        return logs
    log_q = np.log1p(-red)
    log_p = np.log(red)
    logit_p = log_p - log_q
    if bad[0]:
        logs[0], bad[0] = csum(log_q), False
    if bad[m]:
        logs[m], bad[m] = csum(log_p), False
    reach = 0
    for _ in range(m + 1):
        idx = np.flatnonzero(bad)
        if idx.size == 0:
            break
        # aim past the first damaged index so the usable window covers it
        run_end = int(idx[np.searchsorted(np.diff(idx), 2)]) if idx.size > 1 else int(idx[0])
        j = min(int(idx[0]) + reach, run_end, m - 1)
        j = max(j, 1)
        t = _tilt_for_mean(logit_p, float(j))
        tilted = kernels.bernoulli_convolve(np.ascontiguousarray(expit(logit_p + t)))
        shift = csum(log_q + np.logaddexp(0.0, logit_p + t))
        good = bad & (tilted >= UNDERFLOW_GUARD)
        good[j] = True  # the mean of a lattice law never carries negligible mass
        usable = np.flatnonzero(tilted >= UNDERFLOW_GUARD)
        reach = max(1, int(0.9 * min(j - usable[0], usable[-1] - j))) if usable.size else 1
        ks = np.flatnonzero(good)
        logs[ks] = np.log(tilted[ks]) - ks * t + shift
        bad[ks] = False
    return logs


def _check_nodes(n: int, node_count: int):
    if node_count < n + 1:
        raise UnderResolutionError(f"node_count={node_count} cannot resolve a degree-{n} polynomial; need >= {n + 1}")


def poisson_binomial_pmf_dft(
    p: BernoulliVector,
    radius: float = 1.0,
    node_count: int | None = None,
    policy: PrecisionPolicy = DEFAULT_POLICY,
) -> LogPmf:
    """Invert the generating polynomial sampled on a circle of given radius.

    Negative round-off is clamped to zero; no renormalisation is applied.
    The result has ``node_count`` entries.
    """
    if radius <= 0:
        raise InputError("radius must be positive")
    n = p.n
    node_count = n + 1 if node_count is None else int(node_count)
    _check_nodes(n, node_count)
    if policy.extended:
        return _dft_mp(p, radius, node_count, policy)
    vals, counts = np.unique(p.sorted_p, return_counts=True)
    t = np.arange(node_count)
    unit = np.exp(2j * np.pi * t / node_count)
    # log g(w) relative to log g(r); accumulate per distinct probability
    log_norm = 0.0
    log_g = np.zeros(node_count, dtype=np.complex128)
    for x, c in zip(vals, counts):
        base = (1.0 - x) + x * radius
        log_norm += c * math.log(base)
        log_g += c * np.log(((1.0 - x) + x * radius * unit) / base)
    g = np.exp(log_g)
    coef = np.fft.fft(g).real / node_count
    coef[coef < 0] = 0.0
    with np.errstate(divide="ignore"):
        logs = np.log(coef) + log_norm - t * math.log(radius)
    mass = np.exp(logs) if radius != 1.0 else coef
    return LogPmf(logs, EXACT_FINITE, "dft", 0.0, mass=mass)


def _fft_mp(x):
    """Iterative radix-2 FFT over mpmath complex numbers (forward sign)."""
    n = len(x)
    bits = n.bit_length() - 1
    a = [x[int(format(i, f"0{bits}b")[::-1], 2)] if bits else x[i] for i in range(n)]
    size = 2
    while size <= n:
        half = size // 2
        step = mpmath.expjpi(mpmath.mpf(-2) / size)
        tw = [mpmath.mpc(1)]
        for _ in range(half - 1):
            tw.append(tw[-1] * step)
        for start in range(0, n, size):
            for j in range(half):
                u = a[start + j]
                v = a[start + j + half] * tw[j]
                a[start + j] = u + v
                a[start + j + half] = u - v
        size *= 2
    return a


def _dft_mp(p: BernoulliVector, radius: float, node_count: int, policy: PrecisionPolicy) -> LogPmf:
    vals, counts = np.unique(p.sorted_p, return_counts=True)
    with policy.workdps():
        r = mpmath.mpf(radius)
        nodes = [mpmath.expjpi(mpmath.mpf(2 * t) / node_count) for t in range(node_count)]
        g = []
        for w in nodes:
            acc = mpmath.mpc(1)
            for x, c in zip(vals, counts):
                x = mpmath.mpf(x)
                acc *= ((1 - x) + x * r * w) ** int(c)
            g.append(acc)
        if node_count & (node_count - 1) == 0:
            spec = _fft_mp(g)
        else:
            spec = []
            for k in range(node_count):
                rot = mpmath.expjpi(mpmath.mpf(-2 * k) / node_count)
                acc = mpmath.mpc(0)
                z = mpmath.mpc(1)
                for gv in g:
                    acc += gv * z
                    z *= rot
                spec.append(acc)
        out = []
        for k, s in enumerate(spec):
            c = s.real / node_count / r**k
            out.append(c if c > 0 else mpmath.mpf(0))
        logs = np.array([float(mpmath.log(c)) if c > 0 else -np.inf for c in out])
        mass = np.array([float(c) for c in out])
    return LogPmf(logs, EXACT_FINITE, "dft", 0.0, mass=mass, mass_mp=tuple(out))


def pmf_bruteforce(p: BernoulliVector) -> LogPmf:
    """Sum the product over every 0-1 sequence with a given number of ones."""
    n = p.n
    if n > BRUTEFORCE_MAX_N:
        raise SizeLimitError(f"bruteforce enumeration limited to n <= {BRUTEFORCE_MAX_N}, got {n}")
    probs = np.ones(1)
    counts = np.zeros(1, dtype=np.int64)
    for x in p.p:
        probs = np.concatenate([probs * (1.0 - x), probs * x])
        counts = np.concatenate([counts, counts + 1])
    mass = np.array([csum(probs[counts == k]) for k in range(n + 1)])
    return LogPmf.from_mass(mass, support_hint=EXACT_FINITE, method_tag="bruteforce")


def poisson_log_pmf(lam: float, k: int) -> float:
    """log P{Z = k} for Z ~ Poisson(lam)."""
    if lam < 0:
        raise InputError("lambda must be nonnegative")
    if k < 0:
        return -math.inf
    if lam == 0:
        return 0.0 if k == 0 else -math.inf
    return math.fsum([k * math.log(lam), -lam, -log_factorial(k)])


def poisson_log_pmf_array(lam: float, ks) -> np.ndarray:
    from .precision import log_factorial_array

    ks = np.asarray(ks, dtype=np.int64)
    if lam == 0:
        return np.where(ks == 0, 0.0, -np.inf)
    return ks * math.log(lam) - lam - log_factorial_array(ks)


@dataclass(frozen=True)
class StirlingSandwich:
    k: int
    log_lower: float
    log_factorial: float
    log_upper: float

    @property
    def lower(self) -> float:
        return _safe_exp(self.log_lower)

    @property
    def upper(self) -> float:
        return _safe_exp(self.log_upper)

    @property
    def holds(self) -> bool:
        return self.log_lower <= self.log_factorial <= self.log_upper


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def stirling_sandwich(k: int) -> StirlingSandwich:
    """Two-sided Stirling bounds sqrt(2 pi) k^(k+1/2) e^-k <= k! <= e k^(k+1/2) e^-k."""
    if k < 1:
        raise InputError("k must be >= 1")
    core = (k + 0.5) * math.log(k) - k
    out = StirlingSandwich(k, 0.5 * math.log(2 * math.pi) + core, log_factorial(k), 1.0 + core)
    if not out.holds:
        raise AssertionError(f"Stirling sandwich violated at k={k}")
    return out


@dataclass(frozen=True)
class PmfBound:
    name: str
    applicable: bool
    log_lower: float | None
    log_value: float
    log_upper: float | None

    @property
    def holds(self) -> bool:
        if not self.applicable:
            return True
        ok = True
        if self.log_lower is not None:
            ok &= self.log_lower <= self.log_value + 1e-12 * max(1.0, abs(self.log_value))
        if self.log_upper is not None:
            ok &= self.log_value <= self.log_upper + 1e-12 * max(1.0, abs(self.log_value))
        return ok

    @property
    def lower(self):
        return None if self.log_lower is None else _safe_exp(self.log_lower)

    @property
    def upper(self):
        return None if self.log_upper is None else _safe_exp(self.log_upper)

    @property
    def value(self) -> float:
        return _safe_exp(self.log_value)


def poisson_pmf_sandwich(lam: float, k: int) -> list[PmfBound]:
    """Gaussian-type bounds on the Poisson pmf f(k), each with its applicability.

    universal: f(k) <= 1/sqrt(2 pi k)
    central (1 <= k <= 2 lam): e^{-(k-lam)^2/lam}/(e sqrt k) <= f(k) <= e^{-(k-lam)^2/(3 lam)}/sqrt(2 pi k)
    right (k >= lam): f(k) >= e^{-(k-lam)^2/(2 lam)}/(e sqrt k)
    """
    if lam <= 0 or k < 1:
        raise InputError("need lambda > 0 and k >= 1")
    lv = poisson_log_pmf(lam, k)
    half_log = 0.5 * math.log(k)
    base_up = -0.5 * math.log(2 * math.pi) - half_log
    base_lo = -1.0 - half_log
    d2 = (k - lam) ** 2 / lam
    central = 1 <= k <= 2 * lam
    right = k >= lam
    return [
        PmfBound("universal_upper", True, None, lv, base_up),
        PmfBound("central_pair", central, base_lo - d2, lv, base_up - d2 / 3.0),
        PmfBound("right_lower", right, base_lo - d2 / 2.0, lv, None),
    ]


def read_probabilities(path: str | os.PathLike) -> BernoulliVector:
    """Parse one probability per line; '#' lines are comments, blanks ignored."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                x = float(line)
            except ValueError:
                raise ProbabilityFileError(path, lineno, f"not a number: {line!r}") from None
            if not (0.0 <= x <= 1.0) or math.isnan(x):
                raise ProbabilityFileError(path, lineno, f"probability {line} outside [0, 1]")
            values.append(x)
    if not values:
        raise ProbabilityFileError(path, 0, "no probabilities found")
    return BernoulliVector(tuple(values))


def pmf_method(p: BernoulliVector, method: str = "dp", policy: PrecisionPolicy = DEFAULT_POLICY) -> LogPmf:
    """Dispatch on a method name: dp, dft, contour or bruteforce."""
    if method == "dp":
        return poisson_binomial_pmf_dp(p, policy)
    if method == "dft":
        return poisson_binomial_pmf_dft(p, 1.0, None, policy)
    if method == "bruteforce":
        return pmf_bruteforce(p)
    if method == "contour":
        from .saddle import contour_pmf_full

        return contour_pmf_full(p)
    raise InputError(f"unknown pmf method {method!r}")


