"""Exception hierarchy shared by the library and the command line."""


class HeavyTailError(ValueError):
    """Base class; ``category`` is a stable label used by the CLI."""

    category = "error"


class SampleError(HeavyTailError):
    """Invalid observations (non-positive, NaN, too few, unparseable)."""

    category = "sample"


class LevelError(HeavyTailError):
    """Level ``k`` outside the range valid for an estimator."""

    category = "level"


class ProbabilityError(HeavyTailError):
    """Exceedance probability outside ``(0, 1)``."""

    category = "probability"


class ParameterError(HeavyTailError):
    """Model or second-order parameters outside their domain."""

    category = "parameter"


class ZeroRhoError(ParameterError):
    """``rho == 0``: the optimal-level and efficiency formulas degenerate."""

    category = "zero-rho"


class ConfigError(HeavyTailError):
    """Inconsistent run or Monte Carlo configuration."""

    category = "config"


class ExtrapolationWarning(UserWarning):
    """Quantile requested with ``k/(n p) < 1``, i.e. inside the sample range."""
