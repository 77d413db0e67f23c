"""Global-null testing by p-value combination.

Combiners: Bonferroni, the Cauchy combination test (CCT), the positive Cauchy
combination test (PCCT) and the harmonic mean p-value (HMP).  Threshold
families: Cauchy tail approximation, weak-dependence (VWD) and
arbitrary-dependence (VAD).
"""

__version__ = "0.1.0"

from .combine import (  # noqa: E402
    CombinedStatistic,
    CombinerKind,
    PValueVector,
    approx_pvalue,
    combine,
    combine_bonferroni,
    combine_cct,
    combine_hmp,
    combine_pcct,
    generalized_mean,
)
from .errors import (  # noqa: E402
    DomainError,
    InputError,
    NumericalError,
    PCombineError,
    SolverError,
    UnsupportedKindError,
    UsageError,
)
from .numerics import (  # noqa: E402
    HMP_LIMIT,
    S0,
    QuadratureSpec,
    StableLaw,
    TailLaw,
    delta_shift,
    stable_cdf,
    stable_quantile,
)
from .thresholds import (  # noqa: E402
    TestReport,
    ThresholdKind,
    ThresholdResult,
    cauchy_approx_threshold,
    decide,
    threshold,
    vad_threshold,
    vad_threshold_approx,
    vwd_threshold,
)

__all__ = [name for name in dir() if not name.startswith("_")]
