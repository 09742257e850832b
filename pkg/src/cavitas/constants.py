"""Physical constants (CODATA 2018) and unit conventions.

All internal quantities are SI.  Angular frequencies are rad/s everywhere
inside the library; configuration files and the CLI exchange ordinary
frequencies in Hz, converted with an explicit factor of 2*pi at the
boundary.
"""

from dataclasses import dataclass
import math

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysConstants:
    hbar: float = 1.054571817e-34  # J s
    kB: float = 1.380649e-23       # J/K
    c: float = 299792458.0         # m/s
    eps0: float = 8.8541878128e-12  # F/m


CONST = PhysConstants()

# Default bulk density of fused silica used when mass is derived from radius.
SILICA_DENSITY = 1850.0  # kg/m^3

# Mean molecular mass of air, used when the gas species is unspecified.
AIR_MOLECULE_MASS = 4.81e-26  # kg
