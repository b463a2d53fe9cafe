"""Exception types raised by the library."""


class LLLError(Exception):
    """Base class for numeric errors; the CLI maps these to exit code 1."""


class TailNotMet(LLLError):
    """A series hit its term cap before the tail bound dropped below tolerance."""


class ConstraintViolated(LLLError):
    """Prescribed zeros do not satisfy the zero-sum relation of the lattice."""


class ZeroCountMismatch(LLLError):
    """Zeros found in a cell disagree with the argument-principle count."""


class ProbeAtZero(LLLError):
    """Every probe point lies too close to a zero of the function."""


class NotPeriodic(LLLError):
    """A function expected to be invariant under R_gamma is not."""


class StepFailure(LLLError):
    """The adaptive integrator step size underflowed."""


class WindowOverflow(LLLError):
    """A coefficient map pushed a nonzero coefficient out of the window."""


class RealityViolated(LLLError):
    """A Fourier pair violates g(xi) = conj(f(-xi))."""


class NotAdmissible(LLLError):
    """Linearized data for which the weighted stability norms diverge."""


class NoTransition(LLLError):
    """A bisection predicate is constant over the requested range."""
