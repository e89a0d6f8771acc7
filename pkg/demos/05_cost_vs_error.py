"""
Error against wall time
=======================

Stepping cost is timed on pre-generated increments, single threaded.
"""

from sislab.analysis import bench_error_vs_time
from sislab.model import SISParams

params = SISParams(beta=0.5, gamma=0.2, b=0.05, K=1.0, sigma=0.1)
report = bench_error_vs_time(params, 0.5, 1.0, [2.0 ** -k for k in range(5, 9)], 500,
                             master_seed=9, schemes=("em", "gy", "sd"))
print(report.timing_csv(), end="")
