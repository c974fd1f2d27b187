"""Exception and warning types shared across the package."""


class LiouvlabError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(LiouvlabError):
    """Operands have invalid or mutually incompatible dimensions."""


class NonHermitianError(LiouvlabError):
    """A matrix required to be Hermitian is not, beyond tolerance.

    Raised instead of silently symmetrizing: a non-Hermitian input usually
    means corrupted data, not harmless round-off.
    """


class CompletenessError(LiouvlabError):
    """Input-state set does not span the full operator space."""

    def __init__(self, message, rank=None):
        super().__init__(message)
        self.rank = rank


class IllConditionedError(LiouvlabError):
    """Linear inversion refused: the symmetrized input matrix is too
    ill-conditioned for a trustworthy solve."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class SingularProcessError(LiouvlabError):
    """Process matrix is (numerically) singular; no logarithm exists."""


class BranchCutError(LiouvlabError):
    """An eigenvalue lies on or near the negative real axis, so the
    principal matrix logarithm is ambiguous.

    The usual cure is a shorter evolution time: rotation angles |Omega*t|
    must stay below pi for the log to be single-valued.
    """


class ZeroReferenceError(LiouvlabError):
    """Relative Frobenius distance is undefined for a zero reference."""


class BootstrapError(LiouvlabError):
    """Too many bootstrap draws failed to produce a fit."""


class PhysicalityWarning(UserWarning):
    """A propagator or state lies (slightly) outside the physical set.

    Physicality is checked, never enforced: measured process matrices may
    legitimately exceed the unit ball because of reconstruction noise.
    """
