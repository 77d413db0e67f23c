"""
Three ways to set the cut-off
=============================

The Cauchy approximation ignores K.  The weak-dependence threshold (VWD)
uses the stable limit of the sum; the arbitrary-dependence threshold (VAD)
is valid for any dependence between the p-values and is much stricter.
Everything below is on the mean scale: reject when M_phi(p) <= threshold.
"""

import math

from pcombine import threshold, vad_threshold_approx

alpha = 0.05
print(f"{'K':>10s} {'kind':>5s} {'approx':>10s} {'vwd':>10s} {'vad':>10s} {'a/(1.62 lnK)':>13s}")
for K in (10, 10**3, 10**5):
    for kind in ("cct", "pcct", "hmp"):
        row = []
        for fam in ("approx", "vwd", "vad"):
            if fam == "approx" and kind == "hmp":
                row.append(float("nan"))
                continue
            row.append(threshold(kind, fam, K, alpha).mean_scale_threshold)
        rough = vad_threshold_approx(K, alpha) if K >= 100 else float("nan")
        print(f"{K:>10d} {kind:>5s} " + " ".join(f"{v:10.6f}" for v in row) + f" {rough:13.6f}")

# VAD sits close to alpha / (c ln K) with c drifting down towards 1
for K in (10, 10**4, 10**8):
    a = threshold("pcct", "vad", K, alpha).mean_scale_threshold
    print(f"K = {K:>9d}: alpha / (ln K * a) = {alpha / (math.log(K) * a):.4f}")
