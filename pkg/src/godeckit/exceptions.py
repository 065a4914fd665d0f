"""Exception and warning types raised across godeckit."""


class DimensionError(ValueError):
    """Matrix shapes are incompatible with the requested operation."""


class ParameterError(ValueError):
    """A scalar parameter is outside its valid range."""


class FormatError(ValueError):
    """An input file could not be parsed."""


class RankReductionWarning(RuntimeWarning):
    """A projection core was rank deficient and the working rank was reduced."""
