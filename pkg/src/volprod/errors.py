"""Exception types raised across the package."""


class VolprodError(ValueError):
    """Base class for all domain errors."""


class DegenerateInput(VolprodError):
    pass


class CenterNotInterior(VolprodError):
    pass


class OriginNotInterior(VolprodError):
    pass


class ZeroVector(VolprodError):
    pass


class NotOnBoundary(VolprodError):
    pass


class NonSmoothKind(VolprodError):
    """Raised when a gradient of the gauge is requested on a non-smooth body."""


class ConvexityLost(VolprodError):
    pass


class TooLarge(VolprodError):
    pass


class NonConvergence(VolprodError):
    pass


class NotInvariant(VolprodError):
    pass


class ScalingRequired(VolprodError):
    pass


class DependentVectors(VolprodError):
    pass


class PointOutside(VolprodError):
    pass


class HypothesisViolated(VolprodError):
    def __init__(self, index, message=""):
        self.index = index
        super().__init__(f"hypothesis ({index}) violated: {message}")


class NotCentrallySymmetric(VolprodError):
    pass


class HypothesisNotCovered(VolprodError):
    pass
