"""Exception types shared across the package."""


class FpdriftError(Exception):
    """Base class for package-specific failures."""


class DegenerateStatisticsError(FpdriftError):
    """The empirical denominator statistic vanished; the ratio estimator is undefined."""


class DivergenceError(FpdriftError):
    """The fixed-point iteration produced a non-finite iterate."""


class ConfigError(FpdriftError):
    """Invalid or malformed run configuration."""
