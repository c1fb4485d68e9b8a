"""Exception hierarchy; every library error derives from GraphCDEError."""


class GraphCDEError(Exception):
    pass


class DomainError(GraphCDEError, ValueError):
    """Input outside an operation's domain (unknown vertex, NaN, nonpositive f...)."""


class PreconditionError(GraphCDEError, ValueError):
    pass


class InadmissibleError(DomainError):
    """Test function violates the admissibility constraint (e.g. Delta f(x) >= 0)."""


class NoAdmissibleFunction(GraphCDEError):
    pass


class PositivityError(GraphCDEError, ArithmeticError):
    """Solution left the positive cone beyond round-off."""


class IntegrationError(GraphCDEError, RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class UnreachableError(GraphCDEError):
    pass


class CapExceededError(GraphCDEError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class ParseError(GraphCDEError, ValueError):
    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line
