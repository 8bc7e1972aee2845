"""
Exception hierarchy for numerical failures in the solver.

Configuration and input validation use django.core.exceptions.ValidationError;
everything raised while meshing, assembling or stepping derives from FSIError.
"""


class FSIError(Exception):
    """Base class for solver failures"""


class MeshError(FSIError):
    """Invalid grid or solid mesh construction request"""


class InvertedElementError(FSIError):
    """An element has non-positive measure or det(F) <= 0"""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class PointLocationError(FSIError):
    """A point lies outside the fluid grid"""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DimensionMismatchError(FSIError):
    """Operand shapes do not agree"""


class ConstraintConflictError(FSIError):
    """Boundary constraints cannot be applied consistently"""


class SingularSystemError(FSIError):
    """The constrained saddle-point system could not be solved"""


class FixedPointDivergenceError(FSIError):
    """The per-step fixed-point loop did not reach its tolerance"""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class StepFailure(FSIError):
    """A time step failed; wraps the underlying error with the step index"""

    def __init__(self, step, error):
        super().__init__(f"Step {step} failed: {error}")
        self.step = step
        self.error = error
