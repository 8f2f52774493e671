"""Exception hierarchy shared across shlab modules."""


class ShlabError(Exception):
    """Base class for all shlab errors."""


class InvalidValueError(ShlabError):
    """Non-finite or otherwise malformed numeric input."""


class PositivityError(ShlabError):
    """A field that must be strictly positive is not."""


class SolvabilityError(ShlabError):
    """An elliptic right-hand side violates the torus compatibility condition."""


class EnergyPositivityError(ShlabError):
    """Kinetic energy dropped below the admissible floor."""


class DesignError(ShlabError):
    """Height design could not satisfy its constraints."""


class SearchError(ShlabError):
    """A parameter search hit its cap without finding an admissible value."""


class ConstraintError(ShlabError):
    """A pointwise subsolution-type constraint is violated on input data."""


class FormatError(ShlabError):
    """Snapshot file is malformed or inconsistent with its header."""


class ParseError(ShlabError):
    """Scenario file is syntactically or structurally invalid."""


class ValidationError(ShlabError):
    """Scenario contents violate a physical or numerical requirement."""


class NumericalAbort(ShlabError):
    """The time integration had to stop (e.g. positivity failure)."""
