"""Exception hierarchy shared across the package."""


class ToolkitError(Exception):
    """Base class for all convroots errors."""


class ConstructionError(ToolkitError, ValueError):
    """Invalid parameters or an invalid tail handed to a constructor."""


class GridMismatchError(ToolkitError, ValueError):
    """Binary operation on grids with incompatible tilt/step/origin."""


class DivergenceError(ToolkitError, ArithmeticError):
    """An exponential moment required to be finite diverges."""


class CapExceededError(ToolkitError, ArithmeticError):
    """A certified error bound exceeded its configured cap."""
