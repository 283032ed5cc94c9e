"""Exception hierarchy for the equilibrium library."""


class InscycleError(Exception):
    """Base class for all library-specific errors."""


class DegenerateSystem(InscycleError):
    """g1^2 - g2^2 is (numerically) zero, so the market-clearing system
    cannot be inverted.  Signals an equilibrium-validity failure."""


class VanishingDiffusion(InscycleError):
    """The capacity diffusion coefficient Sigma^2 is (numerically) zero,
    i.e. underwriting and investment are simultaneously inactive."""


class NegativeReserves(InscycleError):
    """An individual insurer was given negative liquid reserves."""


class NoEquilibrium(InscycleError):
    """The free-boundary solve failed: either the iteration budget was
    exhausted or the converged candidate violates a model assumption.
    The message names the failing condition."""


class NoBracket(NoEquilibrium):
    """The shooting objective has no sign change over the search bracket,
    so no financing boundary can be located."""


class InvalidSolution(InscycleError):
    """A downstream consumer received an equilibrium solution that violates
    a structural identity (e.g. non-positive diffusion)."""


class SingularSystem(InscycleError):
    """The tridiagonal hitting-time system could not be solved."""


class ConfigError(InscycleError):
    """An experiment configuration file or override is invalid."""
