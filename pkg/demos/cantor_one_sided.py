"""One-sided densities on the middle-third Cantor set.

Prints, for a few random points, the exact ratio between the mass just to the
right of the point and the mass of the full ball, next to the certified
enclosure the refinement engine returns for the same query.
"""

from fractions import Fraction

from conicaldim.dimension import ball_region, one_sided_region
from conicaldim.refinable import SelfSimilarMeasure, measure_region
from conicaldim.symbolic import cantor13, sample_coding, task_rng
from conicaldim.triadic import cantor_one_sided

measure = SelfSimilarMeasure(cantor13())

for i in range(5):
    x = sample_coding(cantor13(), task_rng(2024, i), prefix_len=40, cycle_len=8)
    print(f"point {i}: coding prefix {''.join(map(str, x.prefix[:12]))}...")
    for n in (4, 8, 12):
        right, ball = cantor_one_sided(x, n)
        r = Fraction(1, 3 ** n)
        num = measure_region(measure, one_sided_region(x, r), n + 12)
        den = measure_region(measure, ball_region(x, r), n + 12)
        print(f"  n={n:2d}  exact right/ball = {float(right / ball):.6f}"
              f"  enclosure right = [{float(num.lower):.3e}, {float(num.upper):.3e}]"
              f"  ball = [{float(den.lower):.3e}, {float(den.upper):.3e}]")
