"""
Exception types raised across the fidelity hierarchy engine
"""

from typing import Any, Optional


class HierarchyError(ValueError):
    """Base class for all engine errors"""


class ShapeError(HierarchyError):
    """Operator dimensions do not match the declared subsystem shape"""


class ContractError(HierarchyError):
    """An input violates a documented precondition (e.g. non-Hermitian matrix)"""


class DomainError(HierarchyError):
    """A parameter lies outside the domain of an operation"""


class GuardError(HierarchyError):
    """A dense construction was refused because it exceeds its size guard"""


class ChannelFileError(HierarchyError):
    """A channel JSON file does not match the published schema"""

    def __init__(self, message: str, diagnostics: Optional[list] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class ChannelValidationError(HierarchyError):
    """A channel failed CPTP validation"""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class SolverError(HierarchyError):
    """A solver failed; carries the partial result when one exists"""

    def __init__(self, message: str, result: Any = None, round_index: Optional[int] = None):
        super().__init__(message)
        self.result = result
        self.round_index = round_index
