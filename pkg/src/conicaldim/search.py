"""Word searches for self-similar systems: cone-inclusion words and
separation words, plus the exponent bounds built from them.

Both searches use a numpy screening pass over cylinder enclosure balls in
lexicographic order and then certify the selected words with the scalar
predicates of `conicaldim.geometry`, which is an independent code path.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .geometry import (ConeRegion, Direction, Disposition, HalfCone, PlaneCone, Subspace,
                       classify_offset, direction_net, subspace_net)
from .symbolic import SelfSimilarSystem, Word, compose, cylinder_weight, word_str


class NotFound(Exception):
    """The search space was exhausted; this is not a proof that no word exists."""

    def __init__(self, message: str, report: Optional[dict] = None):
        super().__init__(message)
        self.report = report or {}


# Cylinder tables ---------------------------------------------------------------

class CylinderTable:
    """Float enclosure balls B(f_w(c), r_w R) of all words of each level, in lex order."""

    def __init__(self, system: SelfSimilarSystem, pad: float = 1e-9):
        self.system = system
        b = system.bound()
        self.c0 = np.array([float(x) for x in b.center])
        self.R = float(b.radius) * (1 + pad)
        self.ratio = np.array([float(f.ratio) for f in system.maps])
        self.lin = [float(f.ratio) * np.array(f.rotation, dtype=float) for f in system.maps]
        self.trans = [np.array([float(x) for x in f.translation]) for f in system.maps]
        self._centers = [self.c0[None, :]]
        self._radii = [np.array([self.R])]

    @property
    def kappa(self) -> int:
        return self.system.kappa

    def level(self, q: int):
        while len(self._centers) <= q:
            C, r = self._centers[-1], self._radii[-1]
            self._centers.append(np.concatenate([C @ A.T + t for A, t in zip(self.lin, self.trans)]))
            self._radii.append(np.concatenate([r * s for s in self.ratio]))
        return self._centers[q], self._radii[q]

    def word(self, idx: int, q: int) -> Word:
        out = []
        for _ in range(q):
            idx, s = divmod(idx, self.kappa)
            out.append(s + 1)
        return tuple(reversed(out))

    def index(self, w: Sequence[int]) -> int:
        idx = 0
        for s in w:
            idx = idx * self.kappa + (s - 1)
        return idx


# Cone-inclusion search ---------------------------------------------------------

def search_nets(n: int, m: int, alpha: float):
    """Subspace and direction nets at the resolution used by the search.

    For any V and theta there are net elements with X(0, V_i, alpha/2) inside
    X(0, V, alpha) and H(0, theta, alpha) inside H(0, theta_k, alpha/2).
    """
    a = float(alpha)
    lines = subspace_net(n, m, math.asin(a) - math.asin(a / 2))
    dirs = direction_net(n, math.acos(a / 2) - math.acos(a))
    return lines, dirs


class _NetArrays:
    def __init__(self, lines: Sequence[Subspace], dirs: Sequence[Direction], a: float):
        self.lines, self.dirs = list(lines), list(dirs)
        self.codim = lines[0].codim
        self.B = np.array([s.basis for s in lines], dtype=float)        # L x (n-m) x n
        self.T = np.array([d.unit for d in dirs], dtype=float)          # K x n
        self.a = a
        # key pairs for screening: each line with the directions nearest +-v
        keys = []
        for i, s in enumerate(lines):
            if self.codim == 0:
                keys.extend((i, k) for k in range(len(dirs)))
                break
            v = self.B[i, 0]
            for sgn in (1, -1):
                keys.append((i, int(np.argmax(self.T @ (sgn * v)))))
        self.key_i = np.array([k[0] for k in keys])
        self.key_k = np.array([k[1] for k in keys])

    def tables(self, D: np.ndarray, rho: np.ndarray, sufficient: bool = True):
        """Per-ball Inside (sufficient) or not-Outside (necessary) tables.

        Returns (inc, exc) with inc[j, i] for the plane cone of line i and
        exc[j, k] for the complement of the half-cone of direction k, both at
        aperture a, for the Minkowski-difference balls B(D_j, rho_j).
        """
        a = self.a
        r = np.sqrt(np.einsum("jn,jn->j", D, D))
        t = D @ self.T.T
        if self.codim == 0:
            dist = np.zeros((len(D), 1))
        else:
            proj = np.einsum("jn,lbn->jlb", D, self.B)
            dist = np.sqrt(np.maximum(r[:, None] ** 2 - np.einsum("jlb,jlb->jl", proj, proj), 0.0))
        rr, pp = r[:, None], rho[:, None]
        if sufficient:
            pad = 1 - 1e-12
            ok = rho < r * pad
            if self.codim == 0:
                inc = np.broadcast_to(ok[:, None], (len(D), 1)).copy()
            else:
                inc = ok[:, None] & (dist + pp < a * (rr - pp) * pad)
            exc = ok[:, None] & (t + pp * (1 + a) <= a * (rr - pp) * pad)
        else:
            if self.codim == 0:
                inc = np.ones((len(D), 1), bool)
            else:
                inc = ~(a * (rr + pp) * (1 - 1e-12) <= dist - pp)
            exc = ~(a * (rr + pp) * (1 - 1e-12) < t - pp)
        return inc, exc


@dataclass
class ConeSearchResult:
    h: Word
    level: int
    alpha: float
    m: int
    lines: List[Subspace]
    directions: List[Direction]
    witness_words: List[Word]
    witness_index: np.ndarray          # lines x directions, index into witness_words
    margin: float
    audit_depth: int = 0
    stats: dict = field(default_factory=dict)

    def witness(self, i: int, k: int) -> Word:
        return self.witness_words[int(self.witness_index[i, k])]

    @property
    def pairs(self) -> int:
        return self.witness_index.size


def _h_balls(table: CylinderTable, idx: int, l: int, audit_depth: int):
    """Centers and radii of the depth-``audit_depth`` sub-cylinders of E_h."""
    C, r = table.level(l + audit_depth)
    span = table.kappa ** audit_depth
    return C[idx * span:(idx + 1) * span], r[idx * span:(idx + 1) * span]


def _coverage(net: _NetArrays, Cw, rw, Ch, rh):
    """Pair coverage by witnesses Cw for every sub-ball of E_h at once."""
    inc = exc = None
    for c, rho in zip(Ch, rh):
        i1, e1 = net.tables(Cw - c, rw + rho)
        inc = i1 if inc is None else inc & i1
        exc = e1 if exc is None else exc & e1
    return inc, exc


def _screen(net: _NetArrays, table: CylinderTable, h_idx: int, l: int, k0: int, near: float) -> bool:
    """Necessary condition: every key pair meets a not-Outside cell.

    Cells are the level-k0 cylinders, refined towards level l wherever they
    are close to E_h relative to their size; E_h itself is dropped.
    """
    Chl, rhl = table.level(l)
    ch, rh = Chl[h_idx], rhl[h_idx]
    kap = table.kappa
    Ck, rk = table.level(k0)
    close = rk + rh >= near * np.linalg.norm(Ck - ch, axis=1)
    far_c, far_r = [Ck[~close]], [rk[~close]]
    todo = [(k0, int(i)) for i in np.flatnonzero(close)]
    while todo:
        q, i = todo.pop()
        C, r = table.level(q + 1)
        kids = np.arange(i * kap, (i + 1) * kap)
        if q + 1 == l:
            kids = kids[kids != h_idx]
            far_c.append(C[kids]); far_r.append(r[kids])
            continue
        close = r[kids] + rh >= near * np.linalg.norm(C[kids] - ch, axis=1)
        far_c.append(C[kids[~close]]); far_r.append(r[kids[~close]])
        todo.extend((q + 1, int(i)) for i in kids[close])
    far_c, far_r = np.concatenate(far_c), np.concatenate(far_r)
    if len(far_c) == 0:
        return False
    inc, exc = net.tables(far_c - ch, far_r + rh, sufficient=False)
    hit = (inc[:, net.key_i] & exc[:, net.key_k]).any(axis=0)
    return bool(hit.all())


def _assign(inc: np.ndarray, exc: np.ndarray, L: int, K: int) -> np.ndarray:
    """First (lexicographic) witness for every pair, -1 where none."""
    out = np.full((L, K), -1, dtype=np.int64)
    rows = np.flatnonzero(inc.any(1) & exc.any(1))
    for j in rows:
        I = np.flatnonzero(inc[j])
        Kk = np.flatnonzero(exc[j])
        block = out[np.ix_(I, Kk)]
        block[block < 0] = j
        out[np.ix_(I, Kk)] = block
    return out


def _certify(system, h: Word, w: Word, line: Subspace, theta: Direction, a, audit_depth: int):
    """Scalar re-check of one pair with exact offsets where the system is exact.

    Returns the smallest relative slack over the sub-cylinders of E_h, or None
    when some sub-ball is not certified Inside.
    """
    bound = system.bound()
    n = system.dim
    origin = (0,) * n
    region = ConeRegion(origin, math.inf, PlaneCone(origin, line, a), HalfCone(origin, theta, a))
    gj = compose(system, w)
    cj = gj(bound.center)
    slack = math.inf
    subs = [()]
    for _ in range(audit_depth):
        subs = [u + (s,) for u in subs for s in range(1, system.kappa + 1)]
    for u in subs:
        gh = compose(system, tuple(h) + u)
        D = tuple(x - y for x, y in zip(cj, gh(bound.center)))
        rho = (gh.ratio + gj.ratio) * bound.radius * (1 + 1e-9)
        if classify_offset(D, rho, region) is not Disposition.INSIDE:
            return None
        Df = [float(x) for x in D]
        r = math.sqrt(sum(x * x for x in Df))
        rf, af = float(rho), float(a)
        t = sum(x * y for x, y in zip(Df, theta.unit))
        if line.codim == 0:
            s_inc = (r - rf) / r          # X(y, R^n, a) only removes the vertex
        else:
            s_inc = (af * (r - rf) - float(line.dist(Df)) - rf) / r
        s_exc = (af * (r - rf) - rf * (1 + af) - t) / r
        slack = min(slack, s_inc, s_exc)
    return slack


def cone_inclusion_search(system: SelfSimilarSystem, m: int, alpha, l_max: int, nets=None, *,
                          audit_depth: int = 0, screen_level: int = 4, near: float = 0.25,
                          progress=None, max_seconds: Optional[float] = None) -> ConeSearchResult:
    """Find h in Sigma_l such that every net pair (V_i, theta_k) has a witness j in Sigma_l.

    The witness condition is E_j inside X(y, V_i, alpha/2) minus H(y, theta_k, alpha/2)
    for every y in E_h, tested on the Minkowski difference of enclosure
    balls (with E_h split into its depth-``audit_depth`` sub-cylinders).  By
    the choice of nets this gives E_j inside X(y, V, alpha) minus H(y, theta, alpha)
    for every V and theta.  Levels run from 1 to ``l_max``, h and j in
    lexicographic order, and the first h that covers every pair wins.

    ``max_seconds`` bounds the wall time; when it runs out the search stops
    with NotFound and the report carries ``budget_exhausted``.
    """
    n = system.dim
    if not 0 <= m <= n - 1:
        raise ValueError("codimension m must satisfy 0 <= m <= n-1")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    a_half = Fraction(alpha) / 2 if isinstance(alpha, (int, Fraction)) else alpha / 2
    lines, dirs = nets if nets is not None else search_nets(n, m, float(alpha))
    net = _NetArrays(lines, dirs, float(a_half))
    L, K = len(net.lines), len(net.dirs)
    table = CylinderTable(system)
    best = {"coverage": 0.0, "h": None, "level": None}
    stats = {"screened": 0, "survivors": 0, "levels": 0}
    t0 = time.monotonic()
    out_of_time = False
    for l in range(1, l_max + 1):
        stats["levels"] = l
        Cw, rw = table.level(l)
        for h_idx in range(len(Cw)):
            if max_seconds is not None and time.monotonic() - t0 > max_seconds:
                out_of_time = True
                break
            stats["screened"] += 1
            if l > screen_level and not _screen(net, table, h_idx, l, screen_level, near):
                continue
            stats["survivors"] += 1
            Ch, rh = _h_balls(table, h_idx, l, audit_depth)
            inc, exc = _coverage(net, Cw, rw, Ch, rh)
            rows = inc.any(1) & exc.any(1)
            cov = (inc[rows].T.astype(np.float32) @ exc[rows].astype(np.float32)) > 0
            frac = float(cov.sum()) / (L * K)
            if frac > best["coverage"]:
                best = {"coverage": frac, "h": word_str(table.word(h_idx, l)), "level": l}
            if frac < 1.0:
                continue
            assign = _assign(inc, exc, L, K)
            h = table.word(h_idx, l)
            res = _finish(system, h, l, assign, table, net, a_half, alpha, m, audit_depth, stats)
            if res is not None:
                return res
        if progress is not None:
            progress(l, dict(best), dict(stats))
        if out_of_time:
            break
    raise NotFound(f"no cone-inclusion word up to level {l_max}",
                   {"best_coverage": best["coverage"], "best_h": best["h"], "best_level": best["level"],
                    "pairs": L * K, "budget_exhausted": out_of_time, **stats})


def _finish(system, h, l, assign, table, net, a_half, alpha, m, audit_depth, stats):
    uniq = sorted(set(int(x) for x in assign.ravel()))
    words = [table.word(j, l) for j in uniq]
    pos = {j: p for p, j in enumerate(uniq)}
    index = np.vectorize(pos.get)(assign)
    margin = math.inf
    for i in range(assign.shape[0]):
        for k in range(assign.shape[1]):
            s = _certify(system, h, words[index[i, k]], net.lines[i], net.dirs[k], a_half, audit_depth)
            if s is None:
                return None
            margin = min(margin, s)
    return ConeSearchResult(h, l, float(alpha), m, net.lines, net.dirs, words, index, margin,
                            audit_depth, dict(stats))


def audit_witness(system: SelfSimilarSystem, result: ConeSearchResult, i: int, k: int, rng,
                  samples: int = 1000, depth: int = 30) -> int:
    """Random membership audit of one net pair; returns the number of failures.

    Draws random points y in E_h and z in E_j from random deep codings and
    checks z in X(y, V_i, alpha/2) minus H(y, theta_k, alpha/2) in floats.
    """
    fmaps = [f.to_float() for f in system.maps]
    c0 = tuple(float(x) for x in system.bound().center)
    p = np.array([float(w) for w in system.weights])
    p = p / p.sum()

    def point(prefix):
        tail = rng.choice(system.kappa, size=depth, p=p) + 1
        x = c0
        for s in reversed(tuple(prefix) + tuple(int(v) for v in tail)):
            x = fmaps[s - 1](x)
        return np.array(x)

    a = result.alpha / 2
    V = result.lines[i]
    th = np.array(result.directions[k].unit)
    B = np.array(V.basis, dtype=float)
    j = result.witness(i, k)
    bad = 0
    for _ in range(samples):
        d = point(j) - point(result.h)
        r = float(np.linalg.norm(d))
        dv = 0.0 if V.codim == 0 else math.sqrt(max(r * r - float(np.sum((B @ d) ** 2)), 0.0))
        if not (r > 0 and dv < a * r and float(d @ th) <= a * r):
            bad += 1
    return bad


# Separation search ---------------------------------------------------------

class _Cells:
    """Affine data (M_w, t_w) of a batch of cylinders, so f_w(x) = M_w x + t_w."""

    def __init__(self, system: SelfSimilarSystem):
        b = system.bound()
        self.c0 = np.array([float(x) for x in b.center])
        self.R = float(b.radius) * (1 + 1e-9)
        self.p0 = np.array([float(x) for x in system.maps[0].fixed_point()])   # a point of E
        self.M = np.array([float(f.ratio) * np.array(f.rotation, dtype=float) for f in system.maps])
        self.t = np.array([[float(x) for x in f.translation] for f in system.maps])
        self.r = np.array([float(f.ratio) for f in system.maps])
        self.n = system.dim

    def of_words(self, words):
        M = np.repeat(np.eye(self.n)[None], len(words), axis=0)
        t = np.zeros((len(words), self.n))
        r = np.ones(len(words))
        for j, w in enumerate(words):
            for s in w:
                t[j] = M[j] @ self.t[s - 1] + t[j]
                M[j] = M[j] @ self.M[s - 1]
                r[j] *= self.r[s - 1]
        return M, t, r

    def children(self, M, t, r):
        Mc = np.einsum("jab,sbc->jsac", M, self.M).reshape(-1, self.n, self.n)
        tc = (np.einsum("jab,sb->jsa", M, self.t) + t[:, None, :]).reshape(-1, self.n)
        rc = (r[:, None] * self.r[None, :]).reshape(-1)
        return Mc, tc, rc

    def points(self, M, t, x):
        return np.einsum("jab,b->ja", M, x) + t


def _pair_children(cells: _Cells, A, B):
    """All (child of a, child of b) pairs for paired cell batches A, B."""
    k = len(cells.r)
    Ac = cells.children(*A)
    Bc = cells.children(*B)
    ia = np.repeat(np.arange(len(Ac[0])), k)
    ib = (np.arange(len(A[0]))[:, None, None] * k + np.arange(k)[None, None, :]).repeat(k, axis=1).reshape(-1)
    return tuple(x[ia] for x in Ac), tuple(x[ib] for x in Bc)


def _pair_bounds(cells: _Cells, A, B):
    ca, cb = cells.points(A[0], A[1], cells.c0), cells.points(B[0], B[1], cells.c0)
    gap = np.linalg.norm(ca - cb, axis=1)
    pa, pb = cells.points(A[0], A[1], cells.p0), cells.points(B[0], B[1], cells.p0)
    return gap, cells.R * A[2], cells.R * B[2], np.linalg.norm(pa - pb, axis=1)


def diameter_upper(system: SelfSimilarSystem, depth_cap: int = 14, rtol: float = 1e-9,
                   max_pairs: int = 200_000) -> float:
    """Upper bound for diam(E) by branch and bound over pairs of cylinders."""
    cells = _Cells(system)
    A = cells.of_words([()])
    B = cells.of_words([()])
    lower = 0.0
    for depth in range(depth_cap + 1):
        gap, ra, rb, pts = _pair_bounds(cells, A, B)
        ub = gap + ra + rb
        lower = max(lower, float(pts.max()))
        top = float(ub.max())
        if top <= lower * (1 + rtol) or depth == depth_cap or len(ub) * len(cells.r) ** 2 > max_pairs:
            return top
        keep = ub > lower
        A = tuple(x[keep] for x in A)
        B = tuple(x[keep] for x in B)
        A, B = _pair_children(cells, A, B)
    return top


def distance_lower(system: SelfSimilarSystem, a: Word, others: Sequence[Word], depth_cap: int = 12,
                   rtol: float = 1e-9, max_pairs: int = 200_000) -> float:
    """Certified lower bound for dist(E_a, union of E_w over ``others``).

    Pairs of sub-cylinders are refined level by level; a pair is dropped once
    its ball-gap lower bound exceeds the distance between two known points of
    the sets, and the answer is the smallest lower bound left.
    """
    if not others:
        return math.inf
    cells = _Cells(system)
    A = cells.of_words([tuple(a)] * len(others))
    B = cells.of_words([tuple(w) for w in others])
    upper = math.inf
    for depth in range(depth_cap + 1):
        gap, ra, rb, pts = _pair_bounds(cells, A, B)
        lb = np.maximum(0.0, gap - ra - rb)
        upper = min(upper, float(pts.min()))
        low = float(lb.min())
        if low >= upper * (1 - rtol) or depth == depth_cap or len(lb) * len(cells.r) ** 2 > max_pairs:
            return low * (1 - 1e-12)
        keep = lb <= upper
        A = tuple(x[keep] for x in A)
        B = tuple(x[keep] for x in B)
        A, B = _pair_children(cells, A, B)
    return low * (1 - 1e-12)


def _words(kappa: int, length: int):
    if length == 0:
        return [()]
    return [w + (s,) for w in _words(kappa, length - 1) for s in range(1, kappa + 1)]


@dataclass
class SeparationResult:
    k: Word
    delta: float
    ratio: float
    audited: int

    def __iter__(self):
        yield self.k
        yield self.delta


def separation_word_search(system: SelfSimilarSystem, k_max: int, min_length: int = 0,
                           audit_length: int = 3, depth_cap: int = 12) -> SeparationResult:
    """Shortest (then lexicographically first) k with dist(E_ik, E minus E_i) > delta diam(E_i).

    delta is the certified minimum over all i of length 1..``audit_length`` of
    dist_lower(E_ik, other cylinders of length |i|) / diam_upper(E_i), shrunk
    by a relative 1e-9.
    """
    if not system.osc_asserted:
        raise ValueError("separation search needs a system with the open set condition asserted")
    diam = diameter_upper(system)
    kap = system.kappa
    for length in range(min_length, k_max + 1):
        for k in _words(kap, length):
            ratio = math.inf
            count = 0
            for q in range(1, audit_length + 1):
                level = _words(kap, q)
                for i in level:
                    others = [w for w in level if w != i]
                    d = distance_lower(system, i + k, others, depth_cap)
                    di = diam * float(compose(system, i).ratio)
                    ratio = min(ratio, d / di)
                    count += 1
                    if ratio <= 0:
                        break
                if ratio <= 0:
                    break
            if ratio > 0:
                return SeparationResult(k, ratio * (1 - 1e-9), ratio, count)
    raise NotFound(f"no separation word up to length {k_max}")


# Exponents -------------------------------------------------------------------

def theorem41_exponents(system: SelfSimilarSystem, search: ConeSearchResult, sep) -> Tuple[float, float, float]:
    """Exponent bounds s1, s2 and s = s1 + s2 from a cone word h and a separation word k.

    s1 = 2 log(p^l) / log(1 - mu(E_h)) and s2 = |k| log p / log(1 - mu(E_k)),
    with p the smallest weight; s2 = 0 for the empty word.
    """
    k = tuple(sep[0]) if not isinstance(sep, SeparationResult) else sep.k
    p = float(system.p_min)
    l = len(search.h)
    mu_h = float(cylinder_weight(system, search.h))
    s1 = 2 * l * math.log(p) / math.log1p(-mu_h) if l else 0.0
    if len(k) == 0:
        s2 = 0.0
    else:
        mu_k = float(cylinder_weight(system, k))
        s2 = len(k) * math.log(p) / math.log1p(-mu_k)
    return s1, s2, s1 + s2
