"""Semi-parametric estimation of heavy right tails.

Hill / Weissman-Hill and PLPWM estimators of the extreme value index, tail
scale and extreme quantiles, their asymptotic efficiency machinery, and a
seeded Monte Carlo harness.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ExtrapolationWarning,
    HeavyTailError,
    LevelError,
    ParameterError,
    ProbabilityError,
    SampleError,
    ZeroRhoError,
)
from .sample import Convention, Kind, Sample  # noqa: E402
from .estimators import (  # noqa: E402
    EstimatePath,
    LogMoment,
    TailFit,
    estimate_path,
    estimate_quantile,
    fit_tail,
    hill_evi,
    hill_scale,
    log_moment,
    plpwm_evi,
    plpwm_log_term,
    plpwm_quantile,
    plpwm_scale,
    plpwm_weights,
    weissman_hill_quantile,
)
from .asymptotics import (  # noqa: E402
    AsymptoticConstants,
    SecondOrderParams,
    a_function,
    amse,
    areff,
    areff_grid,
    areff_plpwm_hill,
    constants_for,
    lmse,
    optimal_k0,
    quantile_rate_factor,
)
