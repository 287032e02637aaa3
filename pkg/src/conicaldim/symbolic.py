"""Self-similar systems and their symbolic coding.

Symbols are 1-based as in the usual notation: a word over {1, ..., kappa}
is a tuple of ints, and ``word("121")`` is a shorthand for (1, 2, 1).
Points of the attractor are addressed by `Coding` objects: a finite prefix
followed by an optional cycle repeated forever.  Eventually periodic codings
project to exact rational points whenever the system is rational, which is
what the triadic oracles rely on.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .geometry import as_vector, norm

Word = Tuple[int, ...]


class CodingExhausted(ValueError):
    """Raised when a finite coding is asked for symbols past its end."""


def word(w) -> Word:
    """Normalize '121', [1, 2, 1] or (1, 2, 1) to a tuple of ints."""
    if isinstance(w, str):
        w = w.strip()
        if w in ("", "-", "empty"):
            return ()
        if "," in w or " " in w:
            return tuple(int(s) for s in w.replace(",", " ").split())
        return tuple(int(c) for c in w)
    return tuple(int(s) for s in w)


def word_str(w: Sequence[int]) -> str:
    if not w:
        return "-"
    if max(w) <= 9:
        return "".join(str(s) for s in w)
    return ",".join(str(s) for s in w)


def _exact(x) -> bool:
    return isinstance(x, Rational)


def to_number(s: str):
    """Parse an exact decimal or fraction literal ('1/3', '0.28', '2')."""
    s = s.strip()
    return Fraction(s)


def _matmul(a, b):
    n = len(a)
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n))


def _matvec(a, v):
    return tuple(sum(a[i][k] * v[k] for k in range(len(v))) for i in range(len(a)))


def _identity(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def _solve(a, b):
    """Solve a x = b by Gaussian elimination; exact for Fraction input."""
    n = len(b)
    m = [list(a[i]) + [b[i]] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m[r][col]))
        if m[piv][col] == 0:
            raise ValueError("singular system")
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return tuple(m[i][n] / m[i][i] for i in range(n))


@dataclass(frozen=True)
class Similitude:
    """x -> ratio * rotation @ x + translation."""

    ratio: object
    rotation: Tuple[Tuple[object, ...], ...]
    translation: Tuple[object, ...]

    def __post_init__(self):
        t = as_vector(self.translation)
        rot = tuple(tuple(row) for row in self.rotation)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", rot)
        n = len(t)
        if len(rot) != n or any(len(row) != n for row in rot):
            raise ValueError("rotation must be an n x n matrix")
        if not 0 < self.ratio <= 1:
            raise ValueError("similitude ratio must lie in (0, 1]")
        prod = _matmul(tuple(zip(*rot)), rot)
        for i in range(n):
            for j in range(n):
                if abs(float(prod[i][j]) - (1.0 if i == j else 0.0)) > 1e-10:
                    raise ValueError("rotation is not orthogonal")

    @classmethod
    def identity(cls, n: int) -> "Similitude":
        return cls(1, _identity(n), (0,) * n)

    @classmethod
    def scaling(cls, ratio, translation) -> "Similitude":
        t = as_vector(translation)
        return cls(ratio, _identity(len(t)), t)

    @property
    def dim(self) -> int:
        return len(self.translation)

    @property
    def exact(self) -> bool:
        vals = [self.ratio, *self.translation, *(c for row in self.rotation for c in row)]
        return all(_exact(v) for v in vals)

    def __call__(self, x):
        x = as_vector(x)
        y = _matvec(self.rotation, x)
        return tuple(self.ratio * a + b for a, b in zip(y, self.translation))

    def linear(self, v):
        """Apply only the linear part r * O."""
        return tuple(self.ratio * a for a in _matvec(self.rotation, as_vector(v)))

    def then(self, inner: "Similitude") -> "Similitude":
        """self o inner."""
        rot = _matmul(self.rotation, inner.rotation)
        t = self(inner.translation)
        return Similitude(self.ratio * inner.ratio, rot, t)

    def fixed_point(self):
        n = self.dim
        a = tuple(tuple((1 if i == j else 0) - self.ratio * self.rotation[i][j] for j in range(n)) for i in range(n))
        return _solve(a, self.translation)

    def to_float(self) -> "Similitude":
        return Similitude(float(self.ratio), tuple(tuple(float(c) for c in row) for row in self.rotation),
                          tuple(float(c) for c in self.translation))


@dataclass(frozen=True)
class PointEnclosure:
    center: Tuple[object, ...]
    radius: object


@dataclass(frozen=True)
class Coding:
    """Infinite word ``prefix + cycle + cycle + ...`` (finite if cycle is empty)."""

    prefix: Word = ()
    cycle: Word = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", word(self.prefix))
        object.__setattr__(self, "cycle", word(self.cycle))

    @property
    def finite(self) -> bool:
        return not self.cycle

    @property
    def eventually_constant(self) -> bool:
        return bool(self.cycle) and len(set(self.cycle)) == 1

    def symbol(self, k: int) -> int:
        """Symbol at 0-based position k."""
        if k < len(self.prefix):
            return self.prefix[k]
        if not self.cycle:
            raise CodingExhausted(f"coding has only {len(self.prefix)} symbols, position {k} requested")
        return self.cycle[(k - len(self.prefix)) % len(self.cycle)]

    def take(self, n: int) -> Word:
        if n <= len(self.prefix):
            return self.prefix[:n]
        return self.prefix + tuple(self.symbol(k) for k in range(len(self.prefix), n))

    def shift(self, k: int) -> "Coding":
        if k <= len(self.prefix):
            return Coding(self.prefix[k:], self.cycle)
        if not self.cycle:
            raise CodingExhausted("cannot shift past the end of a finite coding")
        j = (k - len(self.prefix)) % len(self.cycle)
        return Coding((), self.cycle[j:] + self.cycle[:j])

    def __len__(self):
        if self.cycle:
            raise TypeError("infinite coding has no length")
        return len(self.prefix)

    def __str__(self):
        s = word_str(self.prefix)
        if self.cycle:
            s += "(" + word_str(self.cycle) + ")"
        return s

    @classmethod
    def parse(cls, text: str) -> "Coding":
        """'12(2)' means 1 2 2 2 ...; a plain '121' is a finite coding."""
        text = text.strip()
        if "(" in text:
            head, tail = text.split("(", 1)
            return cls(word(head), word(tail.rstrip(")")))
        return cls(word(text), ())


@dataclass(frozen=True)
class SelfSimilarSystem:
    maps: Tuple[Similitude, ...]
    weights: Tuple[object, ...]
    osc_asserted: bool = False
    name: str = "custom"
    degenerate: bool = False
    _bound: Optional[PointEnclosure] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        maps = tuple(self.maps)
        weights = tuple(self.weights)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "weights", weights)
        if len(maps) < 2:
            raise ValueError("a self-similar system needs at least two maps")
        if len(weights) != len(maps):
            raise ValueError("one weight per map is required")
        if len({m.dim for m in maps}) != 1:
            raise ValueError("all maps must act on the same space")
        for m in maps:
            if not m.ratio < 1:
                raise ValueError("maps must be strict contractions")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative")
        if not self.degenerate and any(w == 0 for w in weights):
            raise ValueError("zero weights need degenerate=True")
        total = sum(weights)
        if all(_exact(w) for w in weights):
            if total != 1:
                raise ValueError(f"weights sum to {total}, not 1")
        elif abs(float(total) - 1) > 1e-12:
            raise ValueError(f"weights sum to {float(total)}, not 1")

    @property
    def kappa(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def ratios(self) -> tuple:
        return tuple(m.ratio for m in self.maps)

    @property
    def exact(self) -> bool:
        return all(m.exact for m in self.maps) and all(_exact(w) for w in self.weights)

    @property
    def p_min(self):
        return min(w for w in self.weights if w > 0)

    def check_word(self, w) -> Word:
        w = word(w)
        for s in w:
            if not 1 <= s <= self.kappa:
                raise ValueError(f"symbol {s} outside 1..{self.kappa}")
        return w

    def bound(self) -> PointEnclosure:
        if self._bound is None:
            object.__setattr__(self, "_bound", attractor_bound(self))
        return self._bound


def compose(system: SelfSimilarSystem, w) -> Similitude:
    """f_w = f_{w1} o ... o f_{wn}; the empty word gives the identity."""
    w = system.check_word(w)
    g = Similitude.identity(system.dim)
    for s in w:
        g = g.then(system.maps[s - 1])
    return g


def cylinder_weight(system: SelfSimilarSystem, w):
    w = system.check_word(w)
    p = 1
    for s in w:
        p = p * system.weights[s - 1]
    return p


def moran_exponent(ratios: Iterable[float]) -> float:
    """The t >= 0 with sum r_i**t = 1."""
    from scipy.optimize import brentq

    r = [float(x) for x in ratios]
    if not r:
        raise ValueError("need at least one ratio")
    if any(not 0 < x < 1 for x in r):
        raise ValueError("ratios must lie in (0, 1)")
    if len(r) == 1:
        return 0.0
    g = lambda t: math.fsum(x ** t for x in r) - 1.0
    hi = math.log(len(r)) / -math.log(max(r)) + 1.0
    return brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def natural_weights(ratios) -> tuple:
    t = moran_exponent(ratios)
    w = [float(r) ** t for r in ratios]
    s = math.fsum(w)
    return tuple(x / s for x in w)


def attractor_bound(system: SelfSimilarSystem) -> PointEnclosure:
    """A ball B(c, R) with f_i(B) inside B for every map.

    For a fixed center c the smallest invariant radius is
    max_i |f_i(c) - c| / (1 - r_i).  On the line the midpoint of the extreme
    fixed points is used (exact for rational systems); in higher dimension the
    center is optimized numerically.
    """
    fixed = [f.fixed_point() for f in system.maps]
    if system.dim == 1:
        xs = [p[0] for p in fixed]
        c = ((min(xs) + max(xs)) / 2,)
        R = max(abs(f(c)[0] - c[0]) / (1 - f.ratio) for f in system.maps)
        return PointEnclosure(c, R)
    from scipy.optimize import minimize

    fmaps = [f.to_float() for f in system.maps]
    start = np.mean(np.array(fixed, dtype=float), axis=0)

    def obj(c):
        return max(np.linalg.norm(np.array(f(tuple(c))) - c) / (1 - f.ratio) for f in fmaps)

    res = minimize(obj, start, method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 20000})
    c = tuple(float(x) for x in res.x)
    if system.exact:
        # snap to a short rational so exact callers get reproducible centers
        snapped = tuple(Fraction(x).limit_denominator(10 ** 6) for x in c)
        if obj(np.array(snapped, dtype=float)) <= obj(np.array(c)) * (1 + 1e-9):
            c = tuple(float(x) for x in snapped)
    R = max(norm(tuple(a - b for a, b in zip(f(c), c))) / (1 - f.ratio) for f in fmaps)
    return PointEnclosure(c, R * (1 + 1e-12))


def check_bound(system: SelfSimilarSystem, bound: PointEnclosure) -> None:
    c, R = bound.center, bound.radius
    for f in system.maps:
        lhs = norm(tuple(a - b for a, b in zip(f(c), c))) + f.ratio * R
        if lhs > R * (1 + 1e-12) + 0:
            raise ValueError("attractor bound is not invariant under the maps")


def point_enclosure(system: SelfSimilarSystem, w, attractor: Optional[PointEnclosure] = None) -> PointEnclosure:
    """Ball containing E_w, obtained by mapping the attractor bound through f_w."""
    bound = attractor if attractor is not None else system.bound()
    check_bound(system, bound)
    g = compose(system, w)
    return PointEnclosure(g(bound.center), g.ratio * bound.radius)


def coded_point(system: SelfSimilarSystem, coding: Coding, shift: int = 0):
    """Exact pi(sigma^shift coding) for eventually periodic codings."""
    if coding.finite:
        raise CodingExhausted("a finite coding does not determine a point; give a periodic tail")
    c = coding.shift(shift)
    z = compose(system, c.cycle).fixed_point()
    return compose(system, c.prefix)(z)


def coded_point_float(system: SelfSimilarSystem, coding: Coding, shift: int = 0, fmaps=None,
                      bound: Optional[PointEnclosure] = None):
    """Float approximation of pi(sigma^shift coding), accurate to ~2^-60 relative to the attractor size.

    Works for finite codings as long as enough symbols remain.
    """
    fmaps = fmaps or [f.to_float() for f in system.maps]
    bound = bound or system.bound()
    rmax = max(float(r) for r in system.ratios)
    depth = max(1, math.ceil(60 * math.log(2) / -math.log(rmax)))
    syms = [coding.symbol(shift + j) for j in range(depth)]
    p = tuple(float(x) for x in bound.center)
    for s in reversed(syms):
        p = fmaps[s - 1](p)
    return p


def sample_word(system: SelfSimilarSystem, length: int, rng_seed) -> Word:
    if length < 0:
        raise ValueError("length must be nonnegative")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    p = np.array([float(w) for w in system.weights])
    p = p / p.sum()
    return tuple(int(s) + 1 for s in rng.choice(system.kappa, size=length, p=p))


def task_rng(seed: int, index: int) -> np.random.Generator:
    """Per-task generator: counter-based split of one global seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def sample_coding(system: SelfSimilarSystem, rng_seed, prefix_len: int = 128, cycle_len: int = 64) -> Coding:
    """mu-typical looking coding: random prefix followed by a random cycle.

    The cycle keeps the projected point exact while behaving like a random
    word at every scale probed by the experiments.  Codings whose cycle is
    constant are resampled since they project to construction endpoints.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    while True:
        prefix = sample_word(system, prefix_len, rng)
        cycle = sample_word(system, cycle_len, rng)
        if len(set(cycle)) > 1 or system.degenerate:
            return Coding(prefix, cycle)


def _rational(x, name: str):
    if isinstance(x, str):
        return to_number(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    raise TypeError(f"{name} must be a number")


def cantor13() -> SelfSimilarSystem:
    h = Fraction(1, 2)
    maps = (Similitude.scaling(Fraction(1, 3), (0,)), Similitude.scaling(Fraction(1, 3), (Fraction(2, 3),)))
    return SelfSimilarSystem(maps, (h, h), osc_asserted=True, name="cantor13")


def unit_interval() -> SelfSimilarSystem:
    h = Fraction(1, 2)
    maps = (Similitude.scaling(h, (0,)), Similitude.scaling(h, (h,)))
    return SelfSimilarSystem(maps, (h, h), osc_asserted=True, name="unit-interval")


def prop43(lam=Fraction(7, 25), p=Fraction(1, 10)) -> SelfSimilarSystem:
    """Four planar maps x -> lam x + a_i; requires 1/4 < lam < 1/3 and 0 < p < 1/2."""
    lam = _rational(lam, "lambda")
    p = _rational(p, "p")
    if not Fraction(1, 4) < lam < Fraction(1, 3):
        raise ValueError("prop43 needs 1/4 < lambda < 1/3")
    if not 0 < p < Fraction(1, 2):
        raise ValueError("prop43 needs 0 < p < 1/2")
    a = [(0, 0), (1 - lam, 0), ((1 - lam) / 2, 0), ((1 - lam) / 2, 1 - lam)]
    maps = tuple(Similitude.scaling(lam, t) for t in a)
    q = (1 - p) / 2
    return SelfSimilarSystem(maps, (q, q, p / 2, p / 2), osc_asserted=True,
                             name=f"prop43:{lam},{p}")


def line_cantor_in_plane() -> SelfSimilarSystem:
    """cantor13 placed on the x-axis of the plane (rectifiable support)."""
    third = Fraction(1, 3)
    maps = (Similitude.scaling(third, (0, 0)), Similitude.scaling(third, (2 * third, 0)))
    return SelfSimilarSystem(maps, (Fraction(1, 2), Fraction(1, 2)), osc_asserted=True, name="line-cantor")


def preset(name: str, **params) -> SelfSimilarSystem:
    """Named systems.  ``preset("prop43:0.28,0.1")`` and keyword forms both work."""
    if ":" in name:
        name, args = name.split(":", 1)
        vals = [a for a in args.split(",") if a.strip()]
        if name == "prop43":
            keys = ["lam", "p"]
            params = {**dict(zip(keys, vals)), **params}
    if name == "cantor13":
        return cantor13()
    if name == "unit-interval":
        return unit_interval()
    if name == "prop43":
        return prop43(params.get("lam", Fraction(7, 25)), params.get("p", Fraction(1, 10)))
    if name == "line-cantor":
        return line_cantor_in_plane()
    raise ValueError(f"unknown preset {name!r}")


def read_keyvalue(text: str) -> dict:
    """Parse ``key=value`` lines with ``#`` comments into a dict of strings."""
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",), delimiters=("=",))
    cp.optionxform = str
    cp.read_string("[root]\n" + text)
    return dict(cp["root"])


def _parse_rotation(s: str, n: int):
    rows = [r for r in s.split(";") if r.strip()]
    mat = tuple(tuple(to_number(x) for x in r.split(",")) for r in rows)
    if len(mat) == 1 and len(mat[0]) == 1 and n == 1:
        return mat
    return mat


def load_system(text: str) -> SelfSimilarSystem:
    """Build a system from the plain-text key=value description.

    Keys: ``map.<i>.ratio``, ``map.<i>.translation`` (comma separated),
    optional ``map.<i>.rotation`` (rows separated by ';'), ``weight.<i>``,
    optional ``osc`` (true/false) and ``name``.  Numbers may be fractions.
    """
    kv = read_keyvalue(text)
    idx = sorted({int(k.split(".")[1]) for k in kv if k.startswith("map.")})
    if not idx:
        raise ValueError("system file defines no maps")
    maps = []
    for i in idx:
        try:
            ratio = to_number(kv[f"map.{i}.ratio"])
            t = tuple(to_number(x) for x in kv[f"map.{i}.translation"].split(","))
        except KeyError as e:
            raise ValueError(f"missing key {e.args[0]}") from None
        rot_s = kv.get(f"map.{i}.rotation")
        rot = _parse_rotation(rot_s, len(t)) if rot_s else _identity(len(t))
        maps.append(Similitude(ratio, rot, t))
    weights = []
    for i in idx:
        key = f"weight.{i}"
        if key not in kv:
            raise ValueError(f"missing key {key}")
        weights.append(to_number(kv[key]))
    osc = kv.get("osc", "false").strip().lower() in ("1", "true", "yes")
    return SelfSimilarSystem(tuple(maps), tuple(weights), osc_asserted=osc, name=kv.get("name", "file"))


def dump_system(system: SelfSimilarSystem) -> str:
    lines = [f"name={system.name}", f"osc={'true' if system.osc_asserted else 'false'}"]
    for i, (f, w) in enumerate(zip(system.maps, system.weights), start=1):
        lines.append(f"map.{i}.ratio={f.ratio}")
        lines.append(f"map.{i}.translation={','.join(str(c) for c in f.translation)}")
        lines.append(f"map.{i}.rotation={';'.join(','.join(str(c) for c in row) for row in f.rotation)}")
        lines.append(f"weight.{i}={w}")
    return "\n".join(lines) + "\n"
