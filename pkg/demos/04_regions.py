"""
Scanning a long file region by region
=====================================

A synthetic "genome" of 20,000 null p-values with two planted signals.  The
file is cut into consecutive regions of 500 values and each region is tested
on its own; the per-region level is split across regions.
"""

import numpy as np

from pcombine.regions import analyze_regions

rng = np.random.default_rng(7)
p = rng.uniform(size=20_000)
p[3_210] = 1e-10                     # one very strong hit
p[15_000:15_040] = rng.uniform(0, 1e-3, size=40)  # a weak but wide signal

K = 500
alpha = 0.05 / (p.size // K)
rep = analyze_regions(p, K, ["bonferroni", "cct:vwd", "pcct:vwd", "hmp:vad"], alpha)
print(rep.summary())
for r in rep.regions:
    if any(r.decisions.values()):
        hits = ", ".join(m for m, d in r.decisions.items() if d)
        print(f"region {r.index:3d} (values {r.first_id}-{r.last_id}): {hits}")
