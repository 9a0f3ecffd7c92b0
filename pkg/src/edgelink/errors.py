"""Exception hierarchy shared by all modules."""


class EdgeLinkError(Exception):
    """Base class for all package errors."""


class GeometryError(EdgeLinkError):
    """Lattice shape is not supported (e.g. even square size)."""


class SpecError(EdgeLinkError, ValueError):
    """Invalid system specification or task parameters."""


class IntegrityError(EdgeLinkError):
    """A matrix failed a structural check such as Hermiticity."""


class SymmetryUnavailableError(EdgeLinkError):
    """The system does not carry the pi-rotation symmetry."""


class DegeneracyError(EdgeLinkError):
    """Parity could not be resolved inside a degenerate eigenspace."""


class CalibrationError(EdgeLinkError):
    """Working energy is not inside the edge-state window."""


class PoleError(EdgeLinkError):
    """Energy sits on (or too close to) a lattice eigenvalue."""


class SolverError(EdgeLinkError):
    """Root bracketing or another numerical solve failed."""


class DomainError(EdgeLinkError, ValueError):
    """Argument outside the mathematical domain of a formula."""


class AnalysisError(EdgeLinkError):
    """A time trace does not support the requested analysis."""
