"""Exception taxonomy for qbounce.

Grouped so the CLI can map failures onto exit codes:
configuration problems (1), numerical failures (2), detection failures (3).
"""


class QbounceError(Exception):
    """Base class for all qbounce errors."""


class ConfigError(QbounceError):
    """Invalid configuration input (bad key, bad value, malformed file).

    Carries an optional ``line`` attribute when the error is attributable
    to a specific line of a config file.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DomainError(QbounceError):
    """Input outside the physical/mathematical domain of an operation."""


class NumericError(QbounceError):
    """A numerical procedure failed to converge or went unstable."""


class InstabilityError(NumericError):
    """Norm blow-up detected during time propagation.

    May carry a ``partial_series`` attribute with the samples recorded
    before the abort (flagged incomplete).
    """

    def __init__(self, message, partial_series=None):
        super().__init__(message)
        self.partial_series = partial_series


class BranchAmbiguityError(NumericError):
    """Eigenvalue continuation lost track of its branch (near-degeneracy)."""


class SingularOrderError(QbounceError):
    """Mathieu order with nu^2 = 1: the q^2 series term is singular."""


class ResonanceSingularityError(QbounceError):
    """Packet sits on the resonance separatrix (mu^2 = N^2/4); revival
    formulas are invalid there."""


class DegenerateSpectrumError(QbounceError):
    """E'' vanishes: no revival-time scale exists."""


class NoResonanceError(QbounceError):
    """No integer resonance order N >= 1 matches the drive frequency."""


class DetectionError(QbounceError):
    """A signal-analysis step could not find the feature it looked for."""


class NoRevivalError(DetectionError):
    """No revival peak above the noise floor within the search window."""


class FitError(DetectionError):
    """Degenerate or underdetermined least-squares problem."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code (0 is success, never returned)."""
    if isinstance(exc, (ConfigError, DomainError)):
        return 1
    if isinstance(exc, DetectionError):
        return 3
    if isinstance(exc, QbounceError):
        return 2
    raise TypeError(f"not a qbounce error: {exc!r}")
