"""
Exception hierarchy for the typestate toolchain.

Everything raised on purpose derives from TsopError so the CLI can map a whole
family to one exit code. Parse-time errors also derive from ValueError, internal
consistency failures from AssertionError, runtime violations from RuntimeError.
"""

from typing import Optional


class TsopError(Exception):
    """Root of all toolchain errors."""


class ProtocolSyntaxError(TsopError, ValueError):
    def __init__(self, message: str, position: Optional[int] = None):
        self.message  = message
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class UnknownTagError(ProtocolSyntaxError):
    def __init__(self, tag: str, position: Optional[int] = None):
        self.tag = tag
        super().__init__(f"unknown tag '{tag}'", position)


class IllFormedProtocolError(TsopError, ValueError):
    """A tag occurs both starred and unstarred."""


class EmptyProtocolError(TsopError, ValueError):
    """The protocol admits no trace at all (equivalent to 0)."""


class SpecError(TsopError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.message = message
        self.line    = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class AutomatonError(TsopError, AssertionError):
    """The automaton construction contradicted one of its own invariants."""


class ProtocolViolation(TsopError, RuntimeError):
    def __init__(self, object_name: str, tag: str, counters: dict):
        self.object_name = object_name
        self.tag         = tag
        self.counters    = dict(counters)
        shown = " ".join(f"{t}:{c}" for t, c in self.counters.items())
        super().__init__(
            f"{object_name}: protocol violation on '{tag}' in state ({shown})"
        )


class ScriptError(TsopError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.message = message
        self.line    = line
        prefix = f"script line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class ExpectationFailed(TsopError, AssertionError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.message = message
        self.line    = line
        prefix = f"script line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
