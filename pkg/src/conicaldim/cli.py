"""Command line driver: seeded experiments and CSV output.

Every subcommand writes one CSV table (17 significant digits, fixed header)
to ``--out`` or to standard output.  Exit status is 0 on success, 1 when an
experiment's acceptance predicate fails (or a search finds nothing) and 2 for
usage errors and diagnostics.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from .constructions import GridMeasure, build_sharpness, sharpness_product_bound
from .dimension import (Gauge, ball_region, conical_dims, erdos_revesz_check, local_dims,
                        one_sided_region, ratio_profile)
from .experiments import EXPERIMENTS, Diagnostic, ExperimentResult, run_experiment
from .geometry import ConeRegion, Subspace
from .packing import WeightedPoints, cone_packing, halfspace_packing
from .refinable import SelfSimilarMeasure
from .search import NotFound, cone_inclusion_search
from .symbolic import (Coding, SelfSimilarSystem, coded_point_float, load_system, preset,
                       read_keyvalue, sample_coding, task_rng, to_number, word_str)

INDEX_NAME = "results_index.txt"


class UsageError(ValueError):
    """Invalid configuration; the message names the offending field."""


# Formatting ------------------------------------------------------------------

def fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction):
        v = float(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def emit(text: str, out: Optional[str]) -> None:
    if out:
        d = os.path.dirname(out)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# Parsing helpers ---------------------------------------------------------------

def parse_system(spec: str) -> SelfSimilarSystem:
    if os.path.isfile(spec):
        with open(spec) as fh:
            return load_system(fh.read())
    try:
        return preset(spec)
    except ValueError as e:
        raise UsageError(f"system: {e}") from None


_POW = re.compile(r"^\s*(\d+(?:\.\d+)?)\^(-?\d+(?:\.\d+)?)\s*$")


def parse_scale(text: str):
    m = _POW.match(text)
    if m:
        base, e = m.group(1), m.group(2)
        if "." in base or "." in e:
            return float(base) ** float(e)
        return Fraction(int(base)) ** int(e)
    try:
        return to_number(text)
    except ValueError:
        raise UsageError(f"scales: cannot read {text!r}") from None


def parse_scales(text: str) -> list:
    """'3^-1..3^-40' (integer exponent range) or a comma separated list."""
    if ".." in text:
        a, b = text.split("..", 1)
        ma, mb = _POW.match(a), _POW.match(b)
        if not (ma and mb) or ma.group(1) != mb.group(1):
            raise UsageError("scales: ranges must look like 3^-1..3^-40")
        base = int(ma.group(1))
        e0, e1 = int(ma.group(2)), int(mb.group(2))
        step = 1 if e1 >= e0 else -1
        out = [Fraction(base) ** e for e in range(e0, e1 + step, step)]
    else:
        out = [parse_scale(s) for s in text.split(",") if s.strip()]
    if not out:
        raise UsageError("scales: empty list")
    if any(not x > 0 for x in out):
        raise UsageError("scales: every scale must be positive")
    if any(not b < a for a, b in zip(out, out[1:])):
        raise UsageError("scales: must be strictly decreasing")
    return out


def parse_vector(text: str, name: str) -> tuple:
    try:
        return tuple(to_number(s) for s in text.split(","))
    except ValueError:
        raise UsageError(f"{name}: cannot read {text!r}") from None


def parse_point(text: str, system: SelfSimilarSystem):
    """A coding when the text contains parentheses, otherwise coordinates."""
    if "(" in text:
        c = Coding.parse(text)
        try:
            system.check_word(c.prefix + c.cycle)
        except ValueError as e:
            raise UsageError(f"point: {e}") from None
        return c
    v = parse_vector(text, "point")
    if len(v) != system.dim:
        raise UsageError(f"point: expected {system.dim} coordinates")
    return v


def parse_gauge(text: str) -> Gauge:
    try:
        return Gauge.parse(text)
    except ValueError as e:
        raise UsageError(f"gauge: {e}") from None


# Configuration ----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 1
    out: Optional[str] = None
    params: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("seed: must be a 64-bit unsigned integer")
        ids = [e.upper() for e in self.ids()]
        for e in ids:
            if e not in EXPERIMENTS:
                raise UsageError(f"experiment: unknown id {e!r}")
        for k, v in self.params.items():
            try:
                if float(v) < 0:
                    raise UsageError(f"{k}: must be nonnegative")
            except ValueError:
                pass

    def ids(self) -> List[str]:
        if self.experiment.lower() == "all":
            return list(EXPERIMENTS)
        return [self.experiment.upper()]


def run(config: ExperimentConfig) -> int:
    """Run the configured experiments, write CSVs and index lines; return the exit status."""
    status = 0
    for eid in config.ids():
        try:
            res = run_experiment(eid, config.seed, _typed(config.params))
        except Diagnostic as e:
            print(f"{eid}: diagnostic: {e}", file=sys.stderr)
            return 2
        _write_result(res, config)
        print(res.summary_line())
        if not res.passed:
            status = 1
    return status


def _typed(params: Dict[str, str]) -> dict:
    out = {}
    for k, v in params.items():
        try:
            out[k] = int(v)
        except ValueError:
            try:
                out[k] = float(v)
            except ValueError:
                out[k] = v
    return out


def _write_result(res: ExperimentResult, config: ExperimentConfig) -> None:
    text = to_csv(res.header, res.rows)
    if config.out is None:
        sys.stdout.write(text)
        return
    os.makedirs(config.out, exist_ok=True)
    with open(os.path.join(config.out, f"{res.id}.csv"), "w", newline="") as fh:
        fh.write(text)
    with open(os.path.join(config.out, INDEX_NAME), "a") as fh:
        fh.write(f"seed={config.seed} {res.summary_line()} tolerance=[{res.tolerance}] claim=[{res.claim}]\n")


# Subcommands -----------------------------------------------------------------

def cmd_gen_samples(a) -> int:
    system = parse_system(a.system)
    rows = []
    for i in range(a.count):
        c = sample_coding(system, task_rng(a.seed, i), prefix_len=a.prefix_len, cycle_len=a.cycle_len)
        x = coded_point_float(system, c)
        rows.append([i, str(c), *x])
    header = ["index", "coding"] + [f"x{k}" for k in range(system.dim)]
    emit(to_csv(header, rows), a.out)
    return 0


def _region_family(a, point, system):
    kind = a.region
    if kind == "ball":
        return lambda r: ball_region(point, r)
    if kind == "one-sided":
        theta = parse_vector(a.theta, "theta") if a.theta else (-1,) + (0,) * (system.dim - 1)
        return lambda r: one_sided_region(point, r, theta)
    if kind == "cone":
        if a.subspace is None:
            raise UsageError("subspace: required for cone regions")
        V = Subspace.line(parse_vector(a.subspace, "subspace"))
        theta = parse_vector(a.theta, "theta") if a.theta else None
        return lambda r: ConeRegion.build(point, r, subspace=V, aperture=a.alpha, twist=a.twist, theta=theta)
    raise UsageError(f"region: unknown kind {kind!r}")


def cmd_ratios(a) -> int:
    system = parse_system(a.system)
    point = parse_point(a.point, system)
    prof = ratio_profile(SelfSimilarMeasure(system), point, _region_family(a, point, system),
                         parse_gauge(a.gauge), parse_scales(a.scales), depth_cap=a.depth_cap, rtol=a.rtol)
    rows = [[e.scale, e.num.lower, e.num.upper, e.den.lower, e.den.upper, e.ratio.lo, e.ratio.hi, e.flags]
            for e in prof.entries]
    emit(to_csv(["scale", "num_lower", "num_upper", "den_lower", "den_upper", "ratio_lo", "ratio_hi", "flag"],
                rows), a.out)
    return 0


def _dims_rows(est):
    return [[r, lo, hi, f] for r, (lo, hi), f in zip(est.scales, est.slopes, est.flags)]


def cmd_dims(a) -> int:
    system = parse_system(a.system)
    point = parse_point(a.point, system)
    est = local_dims(SelfSimilarMeasure(system), point, parse_scales(a.scales), a.depth_cap, a.rtol)
    emit(to_csv(["scale", "slope_lo", "slope_hi", "flag"], _dims_rows(est)), a.out)
    return 0


def cmd_conical_dims(a) -> int:
    system = parse_system(a.system)
    point = parse_point(a.point, system)
    a.region = "cone" if a.subspace else "one-sided"
    est = conical_dims(SelfSimilarMeasure(system), point, _region_family(a, point, system),
                       parse_scales(a.scales), depth_cap=a.depth_cap, rtol=a.rtol)
    emit(to_csv(["scale", "slope_lo", "slope_hi", "flag"], _dims_rows(est)), a.out)
    return 0


def cmd_runlength(a) -> int:
    if not 0 < a.p < 1:
        raise UsageError("p: must lie in (0, 1)")
    if a.n < 1000:
        raise UsageError("n: must be at least 1000")
    chk = erdos_revesz_check(a.p, a.n, task_rng(a.seed, 0))
    emit(to_csv(["empirical", "theoretical"], [[chk.empirical, chk.theoretical]]), a.out)
    return 0


def _read_points(path: str):
    """CSV rows 'x[,y],weight' (a header line is skipped when not numeric)."""
    pts, ws = [], []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                vals = [to_number(s) for s in line.split(",")]
            except ValueError:
                continue
            if len(vals) < 2:
                raise UsageError("points: each row needs coordinates and a weight")
            pts.append(tuple(vals[:-1]))
            ws.append(vals[-1])
    if not pts:
        raise UsageError("points: file has no rows")
    return WeightedPoints.of(pts, ws)


def cmd_packing_demo(a) -> int:
    pts = _read_points(a.points)
    theta = parse_vector(a.theta, "theta")
    if len(theta) != pts.n:
        raise UsageError("theta: dimension does not match the points")
    R = to_number(a.radius) if a.radius else None
    radii = [R] * len(pts) if R is not None else _default_radius(pts)
    if a.alpha is None:
        res = halfspace_packing(pts, radii, theta, R)
    else:
        res = cone_packing(pts, radii, [theta] * len(pts), to_number(a.alpha), R)
    rows = [[s.index, *s.center, s.radius, s.captured, s.cls, s.bin, res.total, res.ratio, res.constant]
            for s in res.selected]
    header = ["index"] + [f"x{k}" for k in range(pts.n)] + ["radius", "captured", "class", "bin", "total",
                                                             "ratio", "constant"]
    emit(to_csv(header, rows), a.out)
    return 0


def _default_radius(pts: WeightedPoints):
    # one tenth of the spread, at least 1/64
    span = max((max(p[k] for p in pts.points) - min(p[k] for p in pts.points) for k in range(pts.n)),
               default=Fraction(0))
    return [max(Fraction(span) / 10, Fraction(1, 64))] * len(pts)


def cmd_sharpness(a) -> int:
    g = parse_gauge(a.gauge)
    try:
        con = build_sharpness(g, a.N, a.k_max, a.depth_cap)
    except ValueError as e:
        raise UsageError(f"sharpness: {e}") from None
    rows = []
    for k in range(a.N, a.k_max + 1):
        lev = con.levels[k]
        rows.append([k, lev.target, lev.removed_fraction, lev.overshoot, con.mass(k),
                     sharpness_product_bound(con, a.eps, a.L, k - a.N + 1)])
    if a.n_prod:
        rows.append([a.n_prod, "", "", "", "", sharpness_product_bound(con, a.eps, a.L, a.n_prod)])
    emit(to_csv(["k", "target", "removed_fraction", "overshoot", "F_mass", "product_bound"], rows), a.out)
    return 0


def cmd_grid_measure(a) -> int:
    try:
        gm = GridMeasure(to_number(a.s), to_number(a.t))
    except ValueError as e:
        raise UsageError(f"s,t: {e}") from None
    rows = []
    for i in range(a.points):
        _, chain = gm.sample(task_rng(a.seed, i), a.generations)
        for k, q in enumerate(chain[1:], start=1):
            rows.append([i, k, q.op, q.side, q.mass, math.log(q.mass) / math.log(q.side)])
    emit(to_csv(["point", "generation", "next_op", "side", "mass", "slope"], rows), a.out)
    return 0


def cmd_cone_search(a) -> int:
    system = parse_system(a.system)
    if a.alpha == "auto":
        ratios = set(system.ratios)
        if len(ratios) != 1:
            raise UsageError("alpha: 'auto' needs equal contraction ratios")
        lam = ratios.pop()
        alpha = (1 - 3 * lam) / 10
        if not alpha > 0:
            raise UsageError("alpha: 'auto' needs lambda < 1/3")
    else:
        alpha = to_number(a.alpha)
    try:
        res = cone_inclusion_search(system, a.m, float(alpha), a.l_max, max_seconds=a.max_seconds)
    except NotFound as e:
        r = e.report
        emit(to_csv(["found", "alpha", "level", "h", "coverage", "screened", "survivors"],
                    [[0, alpha, r["best_level"], r["best_h"], r["best_coverage"], r["screened"],
                      r["survivors"]]]), a.out)
        return 1
    emit(to_csv(["found", "alpha", "level", "h", "margin", "witnesses", "pairs"],
                [[1, alpha, res.level, word_str(res.h), res.margin, len(res.witness_words),
                  len(res.lines) * len(res.directions)]]), a.out)
    return 0


def cmd_verify(a) -> int:
    params = dict(kv.split("=", 1) for kv in (a.param or []) if "=" in kv)
    if any("=" not in kv for kv in (a.param or [])):
        raise UsageError("param: expected key=value")
    cfg = ExperimentConfig(a.experiment, a.seed, a.out, params)
    return run(cfg)


# Parser -------------------------------------------------------------------------

def _common(p, seed=True):
    p.add_argument("--config", help="key=value file; command line flags override it")
    p.add_argument("--out", help="output path (file, or directory for verify)")
    if seed:
        p.add_argument("--seed", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conicaldim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-samples", help="seeded codings and coordinates")
    _common(p)
    p.add_argument("--system", default="cantor13")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--prefix-len", type=int, default=128)
    p.add_argument("--cycle-len", type=int, default=64)
    p.set_defaults(func=cmd_gen_samples)

    for name, func in (("ratios", cmd_ratios), ("dims", cmd_dims), ("conical-dims", cmd_conical_dims)):
        p = sub.add_parser(name)
        _common(p, seed=False)
        p.add_argument("--system", default="cantor13")
        p.add_argument("--point", required=True, help="coordinates '0.5' or a coding '12(21)'")
        p.add_argument("--scales", required=True, help="'3^-1..3^-40' or a comma list")
        p.add_argument("--depth-cap", type=int, default=60)
        p.add_argument("--rtol", type=float, default=0.0)
        if name != "dims":
            p.add_argument("--subspace", help="direction of the line V, e.g. '0,1'")
            p.add_argument("--theta", help="direction excluded by H(x, theta, alpha)")
            p.add_argument("--alpha", type=float, default=0.0)
            p.add_argument("--twist", type=float, default=1.0)
        if name == "ratios":
            p.add_argument("--gauge", default="constant:1")
            p.add_argument("--region", default="ball", choices=["ball", "one-sided", "cone"])
        p.set_defaults(func=func)

    p = sub.add_parser("runlength", help="longest {1,2} block law")
    _common(p)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--n", type=int, default=1_000_000)
    p.set_defaults(func=cmd_runlength)

    p = sub.add_parser("packing-demo")
    _common(p, seed=False)
    p.add_argument("--points", required=True, help="CSV file with rows x[,y],weight")
    p.add_argument("--theta", required=True)
    p.add_argument("--radius", help="common radius R (default: a tenth of the spread)")
    p.add_argument("--alpha", help="cone aperture; omit for the half-space version")
    p.set_defaults(func=cmd_packing_demo)

    p = sub.add_parser("sharpness")
    _common(p, seed=False)
    p.add_argument("--gauge", default="invlog")
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--k-max", type=int, default=8)
    p.add_argument("--depth-cap", type=int, default=40)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--L", type=int, default=1)
    p.add_argument("--n-prod", type=int, default=0)
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("grid-measure")
    _common(p)
    p.add_argument("--s", default="1.2")
    p.add_argument("--t", default="1.5")
    p.add_argument("--generations", type=int, default=5)
    p.add_argument("--points", type=int, default=1)
    p.set_defaults(func=cmd_grid_measure)

    p = sub.add_parser("cone-search")
    _common(p, seed=False)
    p.add_argument("--system", default="prop43:0.28,0.1")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--alpha", default="auto")
    p.add_argument("--l-max", type=int, default=8)
    p.add_argument("--max-seconds", type=float, default=None)
    p.set_defaults(func=cmd_cone_search)

    p = sub.add_parser("verify", help="run named experiments E1..E11 or all")
    _common(p)
    p.add_argument("experiment")
    p.add_argument("--param", action="append", help="experiment parameter key=value (repeatable)")
    p.set_defaults(func=cmd_verify)
    return ap


def _apply_config(ap: argparse.ArgumentParser, args: argparse.Namespace, argv: Sequence[str]) -> None:
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as fh:
            values = read_keyvalue(fh.read())
    except OSError as e:
        raise UsageError(f"config: {e}") from None
    given = {tok.split("=", 1)[0].lstrip("-").replace("-", "_") for tok in argv if tok.startswith("--")}
    for key, val in values.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest) or dest in ("func", "command", "config"):
            raise UsageError(f"{key}: unknown configuration field")
        if dest in given:
            continue
        cur = getattr(args, dest)
        try:
            if isinstance(cur, bool):
                val = val.lower() in ("1", "true", "yes")
            elif isinstance(cur, int):
                val = int(val)
            elif isinstance(cur, float):
                val = float(val)
            elif dest == "param":
                val = [v.strip() for v in val.split(";") if v.strip()]
        except ValueError:
            raise UsageError(f"{key}: cannot read {val!r}") from None
        setattr(args, dest, val)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _apply_config(ap, args, argv)
        if hasattr(args, "seed") and not 0 <= args.seed < 2 ** 64:
            raise UsageError("seed: must be a 64-bit unsigned integer")
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except Diagnostic as e:
        print(f"diagnostic: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
