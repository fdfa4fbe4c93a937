"""Exception and warning types shared across the package."""


class PseudoConeError(Exception):
    """Base class for all library errors."""


# geometry

class NotPointed(PseudoConeError):
    """The generators span a cone containing a line."""


class NotFullDimensional(PseudoConeError):
    """The generators do not span the ambient space."""


class InconsistentDualData(PseudoConeError):
    """Generators and facet normals do not describe the same cone."""


class BadReferenceDirection(PseudoConeError):
    """Reference direction is not interior to both the cone and minus its dual."""


class DimensionMismatch(PseudoConeError):
    """Vector length does not match the ambient dimension."""


class DirectionOutsideCone(PseudoConeError):
    """Radial query direction lies outside the interior of the cone."""


class MismatchedOmega(PseudoConeError):
    """Two shapes or a shape and a measure do not share (cone, omega)."""


class ValidationError(PseudoConeError):
    """Semantically invalid input data."""

    def __init__(self, reason, field=None):
        self.reason = reason
        self.field = field
        msg = reason if field is None else f"{field}: {reason}"
        super().__init__(msg)


# linear programming

class LPUnbounded(PseudoConeError):
    """Objective unbounded; for support queries this means a bad direction."""


class LPInfeasible(PseudoConeError):
    """Empty feasible region; cannot happen for positive support vectors."""


# gaussian engine

class EmptyOmegaC(PseudoConeError):
    """No spherical sample landed inside the cone; the cone is degenerate."""


class InactiveFacetWarning(UserWarning):
    """Surface queried on an inactive facet; the exact value is zero."""


# measures

class ZeroVolume(PseudoConeError):
    """Gaussian volume estimate indistinguishable from zero."""


# solver

class DegenerateMeasure(PseudoConeError):
    """All weights of the target measure are zero."""


class InfeasibleWeight(PseudoConeError):
    """A weight exceeds the per-direction supremum of single-facet measures."""


class InvalidOptions(PseudoConeError):
    """Solver or Monte Carlo configuration fails its own consistency checks."""


# analysis

class StepTooLarge(PseudoConeError):
    """Finite-difference step drives the support vector out of positivity."""


class PeakNotFound(PseudoConeError):
    """Scalar scan never bracketed an interior maximum."""


class VerificationFailed(PseudoConeError):
    """A constructed pair failed its Monte Carlo verification."""


# cli

class ParseError(PseudoConeError):
    """Problem file is not syntactically valid."""

    def __init__(self, reason, line=None, field=None):
        self.reason = reason
        self.line = line
        self.field = field
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field {field!r}")
        suffix = f" ({', '.join(loc)})" if loc else ""
        super().__init__(f"{reason}{suffix}")
