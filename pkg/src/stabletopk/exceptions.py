"""Exception types raised by the library."""


class OutOfRangeError(ValueError):
  """A candidate id falls outside ``[0, m)``."""


class RankError(ValueError):
  """A rank or ``k`` falls outside its admissible range."""


class ParameterError(ValueError):
  """A scale, budget or other numeric parameter is invalid."""


class EmptyDomainError(ValueError):
  """Every candidate was excluded by the regularizer."""


class BudgetExhaustedError(RuntimeError):
  """Accumulated failure mass or budget would exceed what is allowed."""


class CalibrationError(RuntimeError):
  """No noise level satisfies the requested privacy target."""


class ParseError(ValueError):
  """Malformed row in an input CSV file."""

  def __init__(self, path, line, message):
    super().__init__(f"{path}:{line}: {message}")
    self.path = path
    self.line = line
