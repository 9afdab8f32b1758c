"""
DAG-WGAN Studio - Error Types
=============================
Structured exceptions with suggested fixes.

Every error raised by the library derives from DagWganError and carries a
list of suggestions, surfaced by the API middleware and the CLI the same way.
"""

from typing import List, Optional


class DagWganError(Exception):
    """Base error with human-readable suggestions"""

    error_type = "dagwgan_error"

    def __init__(self, message: str, suggestions: Optional[List[str]] = None):
        super().__init__(message)
        self.message = message
        self.suggestions = list(suggestions or [])

    def to_dict(self) -> dict:
        return {
            "type": self.error_type,
            "message": self.message,
            "suggestions": self.suggestions,
        }


# =============================================================================
# AUTODIFF
# =============================================================================

class ShapeMismatchError(DagWganError, ValueError):
    error_type = "shape_mismatch"


class UnboundVariableError(DagWganError, KeyError):
    error_type = "unbound_variable"

    def __str__(self) -> str:
        return self.message


class NonFiniteError(DagWganError, FloatingPointError):
    error_type = "non_finite"


class SecondOrderError(DagWganError, NotImplementedError):
    error_type = "second_order_unsupported"


class SingularSystemError(DagWganError, ArithmeticError):
    error_type = "singular_system"


# =============================================================================
# GRAPHS & DATA
# =============================================================================

class AcyclicityOverflowError(NonFiniteError):
    error_type = "acyclicity_overflow"


class GraphFormatError(DagWganError, ValueError):
    error_type = "graph_format"


class DataFormatError(DagWganError, ValueError):
    error_type = "data_format"


class ConfigError(DagWganError, ValueError):
    error_type = "config_error"


# =============================================================================
# TRAINING
# =============================================================================

class TrainingDivergedError(DagWganError, RuntimeError):
    """Raised when a loss goes non-finite; holds the last good model"""

    error_type = "training_diverged"

    def __init__(self, message: str, last_good=None, history=None, partial=None,
                 suggestions: Optional[List[str]] = None):
        super().__init__(message, suggestions or [
            "Lower the learning rate (lr) or raise lr_decay",
            "Enable standardize_flag for badly scaled data",
            "Lower alpha so the acyclicity power stays bounded",
        ])
        self.last_good = last_good
        self.history = history or []
        # TrainResult rebuilt from the last good model and critic
        self.partial = partial
