"""
Two p-values, two answers
=========================

One study reports p = 0.001, a second reports p = 0.999.  Under the Cauchy
combination test the large p-value cancels the small one; the positive
variant has no negative terms, so nothing cancels.
"""

from pcombine import cauchy_approx_threshold, combine, decide
from pcombine.combine import transform

p = [0.001, 0.999]

# the transformed terms: tan{(1/2 - p) pi} for CCT, cot(pi p / 2) for PCCT
print("CCT terms: ", transform("cct", p).round(2))
print("PCCT terms:", transform("pcct", p).round(2))

for kind in ("cct", "pcct"):
    rep = decide(combine(p, kind), cauchy_approx_threshold(kind, 0.05))
    print(f"{kind:5s} T = {rep.statistic:9.3f}  approx p = {rep.approx_pvalue:.4f}  reject: {rep.reject}")
