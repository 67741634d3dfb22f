"""Exception types raised by the solver stack."""


class ContinuityError(Exception):
    """Base class for all solver errors."""


class GeometryError(ContinuityError, ValueError):
    """Invalid geometry descriptor or field shape."""


class GaugeError(ContinuityError, ValueError):
    """Gauge data violates Ric(Omega) = psi or the positivity of omega_0."""


class NonPositiveMetric(ContinuityError):
    """The assembled metric failed the positivity check.

    Attributes
    ----------
    index : tuple
        Grid index of the worst point.
    margin : float
        Smallest eigenvalue found there, measured against the reference metric.
    """

    def __init__(self, index, margin):
        self.index = tuple(int(i) for i in index)
        self.margin = float(margin)
        super().__init__(f"metric not positive definite: margin {self.margin:.3e} at {self.index}")


class LinearSolveError(ContinuityError):
    """Krylov solve did not reach the requested relative residual."""


class NewtonStall(ContinuityError):
    """Newton corrector found no admissible step or hit its iteration cap."""

    def __init__(self, message, margin=float("nan"), residual=float("nan"), iterations=0):
        self.margin = float(margin)
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(f"{message} (margin={self.margin:.3e}, residual={self.residual:.3e})")


class NoContraction(ContinuityError):
    """Picard bootstrap iteration failed to contract."""

    def __init__(self, ratio, iteration):
        self.ratio = float(ratio)
        self.iteration = int(iteration)
        super().__init__(f"Picard iteration not contracting: ratio {self.ratio:.3g} at iteration {iteration}")


class Breakdown(ContinuityError):
    """Step size fell below dt_min; the path cannot be continued."""

    def __init__(self, t_last, margins, extrapolated_T):
        self.t_last = float(t_last)
        self.margins = list(margins)
        self.extrapolated_T = extrapolated_T
        super().__init__(f"continuation breakdown after t={self.t_last:.9g}, extrapolated T={extrapolated_T}")


class MonitorFailure(ContinuityError):
    """A hard a-priori monitor was violated on an accepted state."""


class ConfigError(ContinuityError, ValueError):
    """Malformed or inconsistent run configuration."""
