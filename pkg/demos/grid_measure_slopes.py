"""Square-chain slopes of the two-operation grid measure.

Along the generation squares containing a sampled point, the slope
log mu(Q) / log |Q| oscillates between roughly s and t.
"""

import math

from conicaldim.constructions import GridMeasure, predicted_conical_dimension
from conicaldim.symbolic import task_rng

s, t = 1.2, 1.5
g = GridMeasure(s, t)
point, chain = g.sample(task_rng(7, 0), 5)
print(f"grid measure s={s} t={t}; predicted conical upper dimension {predicted_conical_dimension(s, t):.3f}")
for q in chain[1:]:
    slope = math.log(q.mass) / math.log(q.side)
    print(f"gen {q.gen}: side {float(q.side):.3e}  mass {float(q.mass):.3e}  slope {slope:.4f}  next op ({q.op})")
