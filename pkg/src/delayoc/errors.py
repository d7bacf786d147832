"""Exception types shared across the library."""


class DelayOCError(Exception):
    """Base class for all library errors."""


class ConfigMismatch(DelayOCError):
    """Grids, shapes or parameters are incommensurate."""


class NonFiniteState(DelayOCError):
    """The integrator produced a NaN or Inf state value."""


class Inadmissible(DelayOCError):
    """The state constraint x > 0 failed somewhere on the requested window."""


class NoConvergence(DelayOCError):
    """An iterative solver exhausted its budget without converging."""


class NonPositiveSlope(DelayOCError):
    """The Legendre transform was queried at a slope that is not > 0."""


class OutOfDomain(DelayOCError):
    """The state is outside the domain of the value function."""


class GradientFailure(DelayOCError):
    """The gradient oracle could not produce a positive shadow price."""


class PositivityLoss(DelayOCError):
    """A closed-loop trajectory touched zero.  Carries the time and state."""

    def __init__(self, message, t=None, x=None):
        super().__init__(message)
        self.t = t
        self.x = x


class SweepExhausted(DelayOCError):
    """A parameter sweep hit its cap before meeting its exit condition."""


class NoFeasibleNu(DelayOCError):
    """No dyadic floor satisfies the certified-floor inequalities."""


class DegenerateUtility(DelayOCError):
    """The utility has no room between its value at 0 and its supremum."""
