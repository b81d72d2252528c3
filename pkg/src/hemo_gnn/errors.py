"""Exception hierarchy shared by every hemo-gnn package."""

from typing import Optional


class HemoError(Exception):
    """Base class for all domain errors raised by hemo-gnn."""
    pass


class TopologyError(HemoError):
    """Raised when a centerline graph or 1D geometry is not a connected tree with one inlet."""
    pass


class GraphValidationError(HemoError):
    """Raised when graph data violates a value constraint (areas, tangents, BCs)."""
    pass


class DegenerateEdgeError(HemoError):
    """Raised when an edge connects two coincident node positions."""
    pass


class NormalizationError(HemoError):
    """Raised for missing statistics, empty datasets or channel-count mismatches."""
    pass


class DomainError(HemoError):
    """Raised when a physical formula receives arguments outside its domain."""
    pass


class ContractError(HemoError):
    """Raised when a caller breaks an API contract (wrong mode, stale cache, bad index)."""
    pass


class NumericalError(HemoError):
    """Raised when NaN or Inf values show up in a computation."""
    pass


class SolverError(HemoError):
    """Raised when the Newton iteration of the 1D solver fails to converge."""

    def __init__(self, message: str, step: Optional[int] = None, residual_norm: Optional[float] = None):
        super().__init__(message)
        self.step = step
        self.residual_norm = residual_norm


class RolloutDivergenceError(HemoError):
    """Raised when an autoregressive rollout produces a non-finite state."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class TrainingDivergenceError(HemoError):
    """Raised when the training loss becomes NaN."""

    def __init__(self, message: str, epoch: Optional[int] = None, batch: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class CheckpointError(HemoError):
    """Raised for unreadable checkpoints or config-hash mismatches."""
    pass


class DatasetError(HemoError):
    """Raised for malformed dataset directories, manifests or trajectory files."""
    pass
