"""Exception types shared across the package."""


class SpecPropError(Exception):
    """Base class for all package errors."""


class MetricError(SpecPropError, ValueError):
    """A distance matrix violates a metric axiom."""

    def __init__(self, axiom: str, indices: tuple, message: str):
        super().__init__(message)
        self.axiom = axiom
        self.indices = indices


class LPError(SpecPropError, RuntimeError):
    """The linear program is infeasible, unbounded, or failed to terminate."""


class DimensionError(SpecPropError, ValueError):
    """Inputs do not live on the same space or have the wrong length."""


class AmbiguousMatchingError(SpecPropError, RuntimeError):
    """Eigenbranch matching between two grid points is not unique; refine the grid."""

    def __init__(self, interval: tuple[float, float], gap: float):
        super().__init__(
            f"ambiguous eigenbranch matching on [{interval[0]:.6g}, {interval[1]:.6g}] "
            f"(assignment gap {gap:.3e}); refine the parameter grid there"
        )
        self.interval = interval
        self.gap = gap


class GridRefinementError(SpecPropError, RuntimeError):
    """A delta prefix is empty: the defining inequality fails at the first positive grid point."""


class TruncationDimensionError(SpecPropError, ValueError):
    """The model does not resolve enough branches for the requested truncation; increase its dimension."""


class ManifestError(SpecPropError, ValueError):
    """An experiment manifest failed validation."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
