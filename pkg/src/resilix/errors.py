"""Exception hierarchy.

Every error carries a stable ``code`` string so callers (and the CLI) can
branch on the failure kind without parsing messages.
"""

from __future__ import annotations

from dataclasses import dataclass


class ResilixError(Exception):
    code = "ERROR"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def __str__(self) -> str:
        return f"{self.code}: {self.args[0]}"


class InputError(ResilixError):
    """Bad user input: malformed files, invalid parameters, missing seed."""

    code = "INPUT_ERROR"


@dataclass(frozen=True)
class Issue:
    code: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.field}: {self.message}"


class SpecValidationError(InputError):
    code = "VALIDATION_ERROR"

    def __init__(self, issues: list[Issue]):
        self.issues = list(issues)
        codes = sorted({i.code for i in self.issues})
        msg = "; ".join(str(i) for i in self.issues)
        super().__init__(msg, code=codes[0] if len(codes) == 1 else "VALIDATION_ERROR")


class ModelError(ResilixError):
    """A model or solution does not fit together (dimensions, feasibility)."""

    code = "MODEL_ERROR"


class SolverError(ResilixError):
    code = "SOLVER_ERROR"
