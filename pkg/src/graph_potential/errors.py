"""Exception types shared across the package.

Two broad classes matter for the CLI exit-code mapping: InputError covers
malformed files and bad parameters (exit 2), DomainError covers well-formed
problems the math rejects (exit 1).
"""


class GraphPotentialError(Exception):
    pass


class InputError(GraphPotentialError):
    """Malformed input file, unparsable value, or invalid configuration."""


class VertexNotFoundError(GraphPotentialError):
    def __init__(self, vertex: str):
        super().__init__(f"vertex not found: {vertex}")
        self.vertex = vertex


class DomainError(GraphPotentialError):
    """The computation is impossible for this input (singular system,
    unstable ends, no convergence, ...)."""


class SingularSystemError(DomainError):
    pass


class ConvergenceError(DomainError):
    def __init__(self, message: str, last_delta: float):
        super().__init__(f"{message} (last increment {last_delta:.6g})")
        self.last_delta = last_delta


class StalledPathError(DomainError):
    pass


class NotSubharmonicError(DomainError):
    pass


class EndStructureError(DomainError):
    pass


class SliceError(DomainError):
    pass


class InternalCheckError(GraphPotentialError):
    """A correctness invariant the implementation guarantees was violated;
    always a bug, never a user error."""
