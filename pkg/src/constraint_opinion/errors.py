"""Exception hierarchy shared by the engine, the scenario language and the CLI."""


class OpinionModelError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(OpinionModelError, ValueError):
    """Unknown semiring name, bad option value, or similar setup mistake."""


class CapabilityError(OpinionModelError, TypeError):
    """The semiring or model lacks an operation the caller asked for."""


class SemiringMismatch(OpinionModelError, TypeError):
    """Two objects built over different semirings or domains were combined."""


class EvaluationError(OpinionModelError, KeyError):
    """A valuation leaves a support variable unbound or out of its domain."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ModelError(OpinionModelError, ValueError):
    """Ill-formed model data, e.g. a bias factor outside [0, 1]."""


class AlgebraError(OpinionModelError, ArithmeticError):
    """A partial operation was applied outside its domain (division by zero)."""
