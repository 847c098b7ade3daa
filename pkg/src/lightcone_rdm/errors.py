"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line layer can map it
onto its stable status contract (2 = scientific assertion failed,
3 = bad input or violated precondition).
"""


class LightconeError(Exception):
    exit_code = 3


class CausticError(LightconeError, ValueError):
    """Some mode has ``|sin(omega t)|`` below the caustic guard."""


class MasslessVacuumError(LightconeError, ValueError):
    """A vacuum-based construction was requested with ``mass == 0``."""


class PeriodicWrapError(LightconeError, ValueError):
    """The light cone of a region wraps around the periodic lattice."""


class RegionError(LightconeError, ValueError):
    pass


class SupportError(LightconeError, ValueError):
    """A local operation has entries outside its declared region."""


class NotSymplecticError(LightconeError, ValueError):
    pass


class ComplementMismatch(LightconeError, ValueError):
    """Two states differ outside the region where a local map is sought."""


class DegenerateSpectrum(LightconeError, ArithmeticError):
    pass


class BranchNotVacuumEquivalent(LightconeError, ValueError):
    pass


class RdmMismatch(LightconeError, ValueError):
    """``f1^H f1 != f2^H f2``: no local unitary can relate the two states."""

    exit_code = 2


class RankInstability(LightconeError, ArithmeticError):
    """Singular values fall inside the band where the rank is ambiguous."""


class DimensionOverflow(LightconeError, ValueError):
    pass


class PreconditionError(LightconeError, ValueError):
    pass


class CausalityViolation(LightconeError):
    exit_code = 2
