"""Disjoint ball selection against a half-space and against cones.

Builds a random weighted point set in the plane, runs both selections and
reports how much weight the chosen balls capture.
"""

from fractions import Fraction

from conicaldim.geometry import Direction
from conicaldim.packing import WeightedPoints, cone_packing, halfspace_packing
from conicaldim.symbolic import task_rng

rng = task_rng(11, 0)
pts = WeightedPoints.of([tuple(Fraction(int(v), 32) for v in rng.integers(-32, 33, 2)) for _ in range(40)],
                        [int(w) for w in rng.integers(1, 5, 40)])
R = Fraction(1, 6)

half = halfspace_packing(pts, R, (1, 0))
print(f"half-space: {len(half.selected)} balls, captured {float(half.ratio):.3f} of the total"
      f" (certified floor {float(half.constant):.2e}), disjoint={half.disjoint()}")

thetas = [Direction.from_angle(float(a)) for a in rng.uniform(0, 6.283, len(pts))]
cone = cone_packing(pts, R, thetas, Fraction(1, 2))
print(f"cones:      {len(cone.selected)} balls, captured {float(cone.ratio):.3f} of the total"
      f" (certified floor {float(cone.constant):.2e}), disjoint={cone.disjoint()}")
for sel in half.selected:
    print(f"  center ({float(sel.center[0]):+.3f}, {float(sel.center[1]):+.3f})  captured {sel.captured}")
