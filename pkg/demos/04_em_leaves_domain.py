"""
Euler-Maruyama leaves (0, K)
============================

With strong noise a single Gaussian step near K can overshoot. The
domain-preserving schemes never do.
"""

from sislab.analysis import domain_violation_census
from sislab.model import SISParams

params = SISParams(beta=0.5, gamma=0.2, b=0.05, K=1.0, sigma=1.0)
report = domain_violation_census(params, 0.9, 10.0, [0.2, 0.1, 0.05, 0.025], 4000, master_seed=6)
for row in report.rows:
    print(f"{row.scheme.value} dt={row.dt:<6g} fraction {row.fraction:.4f} "
          f"[{row.wilson_low:.4f}, {row.wilson_high:.4f}]")
