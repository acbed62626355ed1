"""Exception hierarchy shared by all algmech modules."""


class AlgmechError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AlgmechError):
    """Malformed expression text.

    Carries the byte offset of the failure and the set of token kinds
    that would have been accepted there.
    """

    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at byte {offset}"
                         + (f" (expected {', '.join(sorted(expected))})" if expected else ""))
        self.offset = offset
        self.expected = frozenset(expected)


class UnknownFunction(ParseError):
    """Identifier followed by '(' that is not in the function table."""

    def __init__(self, name, offset):
        super().__init__(f"unknown function '{name}'", offset, expected=())
        self.name = name


class UnboundVariable(AlgmechError):
    """Expression references a variable missing from the environment."""

    def __init__(self, name):
        super().__init__(f"unbound variable '{name}'")
        self.name = name


class DomainError(AlgmechError):
    """Operation applied outside its real domain (log/sqrt/fractional power)."""

    def __init__(self, op, argument):
        super().__init__(f"domain error: {op}({argument!r})")
        self.op = op
        self.argument = argument


class ShapeError(AlgmechError):
    """Array argument does not match the structure's declared shape."""


class SingularHessian(AlgmechError):
    """The fiber Hessian of the Lagrangian is (numerically) singular.

    The implicit dynamics still exists at such states but cannot be
    explicitated as an ODE there.
    """

    def __init__(self, message, cond=None, step=None):
        super().__init__(message)
        self.cond = cond
        self.step = step


class NewtonDivergence(AlgmechError):
    """Newton iteration failed to reach the residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class UnknownModel(AlgmechError):
    """Requested builtin model name is not in the catalog."""


class ConfigError(AlgmechError):
    """Configuration file failed validation before any computation."""
