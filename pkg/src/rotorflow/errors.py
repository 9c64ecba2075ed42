"""Exception hierarchy shared across the solver modules."""


class RotorflowError(Exception):
    """Base class for all solver errors."""


class InputError(RotorflowError):
    """Invalid parameters, preconditions, or configuration."""


class TailDivergenceError(RotorflowError):
    """A semi-infinite integral does not converge for the given tail exponent."""


class ModeSolveError(RotorflowError):
    """One or more per-mode solves failed; message lists the offending modes."""


class NonConvergenceError(RotorflowError):
    """Fixed-point or root iteration exhausted its budget without converging."""


class BlowUpError(NonConvergenceError):
    """Iterate norms exceeded the divergence guard.

    Raised with the diagnosis that the boundary data lies outside the
    contraction ball; the admissible radius is not computable a priori.
    """


class VerificationError(RotorflowError):
    """A stored solution failed re-verification."""
