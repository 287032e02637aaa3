"""Gauges, density-ratio profiles, local and conical dimension estimates, and
run-length statistics of codings.

Finite-scale summaries follow one fixed rule: the upper (lower) dimension
proxy is the max (min) over the last half of the supplied scale list.
Slopes are log mu / log r with log r < 0, so a measure interval [lo, hi]
turns into the slope interval [log hi / log r, log lo / log r].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import ConeRegion, Subspace
from .refinable import MeasureBound, RatioInterval, as_measure, measure_region, ratio_bounds
from .symbolic import Coding, CodingExhausted
from .triadic import HALF, cantor_one_sided, run_length


# Gauges ----------------------------------------------------------------------

@dataclass(frozen=True)
class Gauge:
    """Gauge function f on (0, 1).

    kinds: ``logpow`` with f(t) = |log t|^-s, ``constant`` with f = c, and
    ``table`` wrapping any increasing callable.
    """

    kind: str
    param: float = 0.0
    func: Optional[Callable[[float], float]] = field(default=None, compare=False)

    @classmethod
    def logpow(cls, s: float) -> "Gauge":
        return cls("logpow", float(s))

    @classmethod
    def constant(cls, c: float) -> "Gauge":
        return cls("constant", float(c))

    @classmethod
    def table(cls, func) -> "Gauge":
        if isinstance(func, (int, float, Fraction)):
            return cls.constant(float(func))
        return cls("table", 0.0, func)

    @classmethod
    def parse(cls, text: str) -> "Gauge":
        """'logpow:2', 'constant:0.5' or 'invlog' (= logpow:1)."""
        text = text.strip()
        if text == "invlog":
            return cls.logpow(1)
        kind, _, arg = text.partition(":")
        if kind == "logpow":
            return cls.logpow(float(Fraction(arg)))
        if kind == "constant":
            return cls.constant(float(Fraction(arg)))
        raise ValueError(f"unknown gauge {text!r}")

    def __str__(self):
        if self.kind == "table":
            return "table"
        return f"{self.kind}:{self.param:g}"

    def at_log(self, log_t: float) -> float:
        """f(t) given log t; avoids underflow for tiny t."""
        if self.kind == "logpow":
            return abs(log_t) ** -self.param
        if self.kind == "constant":
            return self.param
        return float(self.func(math.exp(log_t)))

    def __call__(self, t) -> float:
        if self.kind == "constant":
            return self.param
        if isinstance(t, Rational):
            log_t = math.log(t.numerator) - math.log(t.denominator)
        else:
            log_t = math.log(t)
        return self.at_log(log_t)


def gauge_integrability(g: Gauge, i_max: int) -> Tuple[str, float]:
    """Partial sum of f(2^-i) for i <= i_max and the analytic classification.

    The integral of f(t)/t over (0, 1) is finite iff the dyadic sum is; for
    logpow(s) that happens iff s > 1.
    """
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    ln2 = math.log(2)
    partial = math.fsum(g.at_log(-i * ln2) for i in range(1, i_max + 1))
    if g.kind == "logpow":
        cls = "convergent" if g.param > 1 else "divergent"
    elif g.kind == "constant":
        cls = "convergent" if g.param == 0 else "divergent"
    else:
        cls = "unknown"
    return cls, partial


# Profiles and slope estimates -------------------------------------------------

def ball_region(point, r) -> ConeRegion:
    return ConeRegion(point, r)


def one_sided_region(point, r, theta=(-1,)) -> ConeRegion:
    """B(x, r) minus the open half-line/half-space H(x, theta, 0).

    With theta = -1 on the line this is the right half-ball [x, x + r].
    """
    return ConeRegion.build(point, r, theta=theta, aperture=0)


@dataclass
class ProfileEntry:
    scale: float
    num: MeasureBound
    den: MeasureBound
    ratio: RatioInterval
    flags: str = ""


@dataclass
class RatioProfile:
    point: object
    entries: List[ProfileEntry]

    def ratios(self) -> List[RatioInterval]:
        return [e.ratio for e in self.entries]


def ratio_profile(m, point, regions: Callable[[float], ConeRegion], g: Gauge, scales: Sequence,
                  depth_cap: int = 60, rtol: float = 0.0) -> RatioProfile:
    """Interval values of mu(region_r) / (f(r) mu(B(x, r))) along ``scales``."""
    m = as_measure(m)
    _check_decreasing(scales)
    out = []
    for r in scales:
        num = measure_region(m, regions(r), depth_cap, rtol=rtol)
        den = measure_region(m, ball_region(point, r), depth_cap, rtol=rtol)
        ri = ratio_bounds(num, den, g(r))
        flags = "empty-ball" if ri.empty else ("unbounded" if ri.unbounded else "")
        out.append(ProfileEntry(float(r), num, den, ri, flags))
    return RatioProfile(point, out)


def _check_decreasing(scales):
    for a, b in zip(scales, scales[1:]):
        if not b < a:
            raise ValueError("scales must be strictly decreasing")


def _log(x) -> float:
    if isinstance(x, Rational):
        f = float(x)
        if f > 1e-300:
            return math.log(f)
        return math.log(x.numerator) - math.log(x.denominator)
    return math.log(x)


def slope_interval(bound: MeasureBound, r) -> Tuple[float, float, str]:
    """Slope interval of log mu / log r for mu in [lower, upper]."""
    lr = _log(r)
    if bound.upper == 0:
        return math.inf, math.inf, "empty"
    lo = _log(bound.upper) / lr
    if bound.lower == 0:
        return lo, math.inf, "lower-zero"
    return lo, _log(bound.lower) / lr, ""


@dataclass
class DimEstimate:
    scales: List[float]
    slopes: List[Tuple[float, float]]
    flags: List[str]

    def _tail(self):
        h = len(self.scales) // 2
        pairs = [(s, f) for s, f in zip(self.slopes[h:], self.flags[h:]) if f == ""]
        return pairs

    @property
    def flagged(self) -> int:
        return sum(1 for f in self.flags if f)

    def summary(self) -> dict:
        """Max / min over the last half of the scales (flagged entries dropped)."""
        tail = self._tail()
        if not tail:
            return {"max": (math.nan, math.nan), "min": (math.nan, math.nan), "used": 0,
                    "flagged": self.flagged}
        los = [s[0] for s, _ in tail]
        his = [s[1] for s, _ in tail]
        return {"max": (max(los), max(his)), "min": (min(los), min(his)), "used": len(tail),
                "flagged": self.flagged}

    def midpoints(self) -> List[float]:
        return [(a + b) / 2 for a, b in self.slopes]


def local_dims(m, point, scales: Sequence, depth_cap: int = 60, rtol: float = 0.0) -> DimEstimate:
    m = as_measure(m)
    _check_decreasing(scales)
    slopes, flags = [], []
    for r in scales:
        b = measure_region(m, ball_region(point, r), depth_cap, rtol=rtol)
        lo, hi, fl = slope_interval(b, r)
        slopes.append((lo, hi))
        flags.append(fl)
    return DimEstimate([float(r) for r in scales], slopes, flags)


def conical_dims(m, point, family: Callable, scales: Sequence, net: Optional[Sequence] = None,
                 depth_cap: int = 60, rtol: float = 0.0) -> DimEstimate:
    """Slopes of the cone measures ``family(r, elem)``.

    With a net of elements (directions, subspaces or pairs), the sup over the
    net of log mu / log r is taken, i.e. the minimum measure over the net.
    Without a net, ``family(r)`` is called with the scale only.
    """
    m = as_measure(m)
    _check_decreasing(scales)
    slopes, flags = [], []
    for r in scales:
        if net is None:
            b = measure_region(m, family(r), depth_cap, rtol=rtol)
        else:
            bs = [measure_region(m, family(r, e), depth_cap, rtol=rtol) for e in net]
            b = MeasureBound(min(x.lower for x in bs), min(x.upper for x in bs),
                             sum(x.unresolved for x in bs))
        lo, hi, fl = slope_interval(b, r)
        slopes.append((lo, hi))
        flags.append(fl)
    return DimEstimate([float(r) for r in scales], slopes, flags)


# Run statistics ----------------------------------------------------------------

@dataclass(frozen=True)
class RunStats:
    gamma: float   # run of 2s right after position n (inf for an endless run)
    z: int         # longest all-{1,2} block in the first n symbols


def _as_symbols(word, n_needed: int):
    if isinstance(word, Coding):
        return word.take(n_needed)
    if isinstance(word, str):
        from .symbolic import word as parse
        return parse(word)
    return tuple(word)


def longest_block(symbols: Sequence[int], allowed=(1, 2)) -> int:
    best = cur = 0
    allowed = set(allowed)
    for s in symbols:
        cur = cur + 1 if s in allowed else 0
        best = max(best, cur)
    return best


def run_stats(word, n: int) -> RunStats:
    """Exact Gamma_n and Z_n of a word or coding."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if isinstance(word, Coding):
        gamma = run_length(word, n, 2)
        return RunStats(gamma, longest_block(word.take(n)))
    syms = _as_symbols(word, n)
    if n > len(syms):
        raise CodingExhausted(f"word has {len(syms)} symbols, n = {n} requested")
    g = 0
    while n + g < len(syms) and syms[n + g] == 2:
        g += 1
    return RunStats(g, longest_block(syms[:n]))


def longest_true_run(mask: np.ndarray) -> int:
    if not mask.any():
        return 0
    m = np.concatenate(([False], mask, [False])).astype(np.int8)
    d = np.diff(m)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return int((ends - starts).max())


@dataclass(frozen=True)
class RunLawCheck:
    empirical: float
    theoretical: float
    degenerate: bool = False


def erdos_revesz_check(p: float, n: int, seed) -> RunLawCheck:
    """Z_n / log n for a stream where each symbol is in {1, 2} with probability 1 - p."""
    if not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    if n < 1000:
        raise ValueError("n must be at least 1000")
    if p == 0:
        return RunLawCheck(n / math.log(n), math.inf, degenerate=True)
    rng = np.random.default_rng(seed)
    mask = rng.random(n) >= p
    z = longest_true_run(mask)
    return RunLawCheck(z / math.log(n), 1 / abs(math.log(1 - p)))


def io_criterion(a, n_max: int) -> Tuple[float, str]:
    """Partial sum of 2^-a_n and the divergence classification when known.

    ``a`` is a callable n -> a_n, or one of the strings 'n', 'log2n', or a
    gauge spec such as 'logpow:1' meaning a_n = ceil(-log2 f(3^-n)).
    """
    cls = "unknown"
    if isinstance(a, str):
        if a == "n":
            fn, cls = (lambda n: n), "convergent"
        elif a == "log2n":
            fn, cls = (lambda n: math.ceil(math.log2(n))), "divergent"
        else:
            g = Gauge.parse(a)
            ln3 = math.log(3)
            fn = lambda n: max(0, math.ceil(-math.log2(g.at_log(-n * ln3))))
            if g.kind == "logpow":
                # 2^-a_n is comparable to f(3^-n) = (n ln 3)^-s
                cls = "divergent" if g.param <= 1 else "convergent"
    elif isinstance(a, Gauge):
        return io_criterion(str(a), n_max)
    else:
        fn = a
    total = math.fsum(2.0 ** -fn(n) for n in range(1, n_max + 1))
    return total, cls


# Desk checks -----------------------------------------------------------------

def one_sided_ratio(coding: Coding, n: int, g: Gauge, weights=(HALF, HALF)) -> float:
    """mu[x, x + 3^-n] / (f(3^-n) mu[x - 3^-n, x + 3^-n]) on the Cantor set, exact up to f."""
    right, ball = cantor_one_sided(coding, n, weights)
    if ball == 0:
        return math.nan
    return float(right / ball) / g.at_log(-n * math.log(3))


@dataclass
class OneSidedCheck:
    flagged: bool
    two_sided: float = math.nan
    one_sided: float = math.nan


def one_sided_dim_check(codings: Iterable[Coding], ns: Sequence[int], weights=(HALF, HALF)) -> List[OneSidedCheck]:
    """Lower-dimension proxies from two-sided balls and right half-balls.

    Both proxies are the minimum slope over the last half of ``ns``, computed
    from exact triadic measures.  Eventually constant codings project to
    construction-interval endpoints and are flagged instead.
    """
    out = []
    tail = list(ns)[len(ns) // 2:]
    for c in codings:
        if c.eventually_constant or c.finite:
            out.append(OneSidedCheck(True))
            continue
        two, one = [], []
        for n in tail:
            right, ball = cantor_one_sided(c, n, weights)
            lr = -n * math.log(3)
            two.append(_log(ball) / lr)
            one.append(_log(right) / lr if right > 0 else math.inf)
        out.append(OneSidedCheck(False, min(two), min(one)))
    return out


@dataclass
class TwistedCheck:
    conical: DimEstimate
    local: DimEstimate
    conical_min: float
    local_min: float
    bound: float


def twisted_dim_check(m, beta: float, alpha: float, V: Subspace, point, scales: Sequence,
                      depth_cap: int = 200, rtol: float = 0.02) -> TwistedCheck:
    """Finite-scale comparison of the twisted-cone slope with m(beta-1) + ldim.

    The liminf proxies are minima over the last half of the scales of the
    slope-interval midpoints.
    """
    if not 1 <= beta <= 1.5:
        raise ValueError("beta must lie in [1, 1.5]")
    codim = V.codim
    fam = lambda r: ConeRegion.build(point, r, subspace=V, aperture=alpha, twist=beta)
    con = conical_dims(m, point, fam, scales, depth_cap=depth_cap, rtol=rtol)
    loc = local_dims(m, point, scales, depth_cap=depth_cap, rtol=rtol)
    cmin = _tail_min_mid(con)
    lmin = _tail_min_mid(loc)
    return TwistedCheck(con, loc, cmin, lmin, codim * (beta - 1) + lmin)


def _tail_min_mid(est: DimEstimate) -> float:
    h = len(est.scales) // 2
    vals = [(a + b) / 2 for (a, b), f in zip(est.slopes[h:], est.flags[h:]) if f == ""]
    return min(vals) if vals else math.nan
