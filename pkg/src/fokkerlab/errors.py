"""Exception hierarchy shared by all modules."""


class FokkerError(Exception):
    """Base class for numerical failures raised by fokkerlab."""


class FoldOverError(FokkerError, ValueError):
    """A reparametrization made the parameter grid non-monotone."""


class GrazingRoot(FokkerError):
    """Tangential lightcone contact: the crossing weight 1/|f'| is meaningless."""


class NoContraction(FokkerError):
    """The perturbative momentum inversion does not contract."""


class SpacelikeMomentum(FokkerError, ValueError):
    """(p - R)^2 <= 0 where a real square root is required."""


class NoShellReturn(FokkerError):
    """No proper time in the search window restores P_eps = m^2 / 2."""


class SingularA(FokkerError, ValueError):
    """Quadratic form of a Gaussian integral is (numerically) singular."""


class MaxIterations(FokkerError):
    """Stationary-point search hit its iteration cap."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario file."""
