"""Exception hierarchy.

Every error carries a short ``category`` string which the command line
front end prints as the first token of its one-line error message.
"""


class MDHError(Exception):
    category = "error"


class ConfigError(MDHError, ValueError):
    """Invalid tuning constants, flags or mixture specification."""

    category = "config"


class InputError(MDHError, ValueError):
    """Malformed input data (non-numeric cells, wrong lengths, ...)."""

    category = "input"


class DimensionError(InputError):
    category = "dimension"


class DegenerateCurveError(MDHError, ValueError):
    """The sum-of-squares curve is flat between its end points."""

    category = "degenerate"
