"""Laboratory <-> dimensionless unit conversion for the gravitational cavity.

Lengths are scaled by g/omega^2, times by 1/omega, energies by M*g^2/omega^2
(M = atom mass, g = gravitational acceleration, omega = drive angular
frequency).  In these units the Hamiltonian of the bouncing atom contains a
single dimensionless parameter, the effective Planck constant

    kbar = hbar * omega^3 / (M * g^2),

which is ~1 for cesium driven at 2*pi*930 rad/s.
"""

from dataclasses import dataclass

from .errors import DomainError

HBAR = 1.054571817e-34  # J*s
G_STANDARD = 9.8  # m/s^2
CESIUM_MASS = 2.2e-25  # kg


@dataclass(frozen=True)
class ScaledUnits:
    """Conversion factors between lab and dimensionless units.

    Attributes:
        length_scale: meters per dimensionless length unit (g/omega^2).
        time_scale: seconds per dimensionless time unit (1/omega).
        energy_scale: joules per dimensionless energy unit (M*g^2/omega^2).
        kbar: dimensionless effective Planck constant.
    """

    length_scale: float
    time_scale: float
    energy_scale: float
    kbar: float

    def __post_init__(self):
        for name in ("length_scale", "time_scale", "energy_scale", "kbar"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


def derive_units(mass: float, gravity: float, drive_frequency: float,
                 hbar: float = HBAR) -> ScaledUnits:
    """Build ScaledUnits from lab parameters.

    Args:
        mass: atom mass in kg.
        gravity: gravitational acceleration in m/s^2.
        drive_frequency: angular frequency of the mirror modulation in rad/s.
        hbar: Planck constant over 2*pi, overridable for unit tests.

    Raises:
        DomainError: if any input is non-positive.
    """
    if not (mass > 0 and gravity > 0 and drive_frequency > 0 and hbar > 0):
        raise DomainError("mass, gravity, drive_frequency and hbar must be positive")
    w = drive_frequency
    return ScaledUnits(
        length_scale=gravity / w**2,
        time_scale=1.0 / w,
        energy_scale=mass * gravity**2 / w**2,
        kbar=hbar * w**3 / (mass * gravity**2),
    )


def cesium_units(drive_frequency: float = 2 * 3.141592653589793 * 930.0) -> ScaledUnits:
    """Units for the cesium bouncer at the standard drive frequency."""
    return derive_units(CESIUM_MASS, G_STANDARD, drive_frequency)


def to_dimensionless_position(z_lab: float, units: ScaledUnits) -> float:
    """Convert a lab-frame height in meters to dimensionless units."""
    return z_lab / units.length_scale


def to_lab_position(z: float, units: ScaledUnits) -> float:
    """Convert a dimensionless height back to meters."""
    return z * units.length_scale
