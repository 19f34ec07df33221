"""Physical constants (CODATA 2018) and unit conversions.

Internal convention: energies and frequencies are angular (rad/s) everywhere
inside the package. Conversions from lab units (cm^-1, MHz, nm, Debye, amu)
happen here and only here.
"""

import math

PLANCK = 6.62607015e-34          # J s
HBAR = 1.054571817e-34           # J s
C_LIGHT = 299792458.0            # m/s
K_BOLTZMANN = 1.380649e-23       # J/K
EPSILON_0 = 8.8541878128e-12     # F/m
AMU = 1.66053906660e-27          # kg
DEBYE = 1e-21 / C_LIGHT          # C m

TWO_PI = 2.0 * math.pi


def percm_to_rads(wavenumber: float) -> float:
    """Wavenumber in cm^-1 to angular frequency in rad/s."""
    return TWO_PI * C_LIGHT * 100.0 * wavenumber


def rads_to_percm(omega: float) -> float:
    return omega / (TWO_PI * C_LIGHT * 100.0)


def percm_to_joule(wavenumber: float) -> float:
    return PLANCK * C_LIGHT * 100.0 * wavenumber


def percm_to_mhz(wavenumber: float) -> float:
    """Wavenumber in cm^-1 to ordinary (not angular) frequency in MHz."""
    return C_LIGHT * 100.0 * wavenumber / 1e6


def mhz_to_rads(nu_mhz: float) -> float:
    """Ordinary frequency in MHz to angular frequency in rad/s."""
    return TWO_PI * 1e6 * nu_mhz


def rads_to_mhz(omega: float) -> float:
    return omega / (TWO_PI * 1e6)


def nm_to_rads(wavelength_nm: float) -> float:
    """Vacuum wavelength in nm to angular frequency in rad/s."""
    return TWO_PI * C_LIGHT / (wavelength_nm * 1e-9)


def debye_to_cm(dipole_debye: float) -> float:
    return dipole_debye * DEBYE


def amu_to_kg(mass_amu: float) -> float:
    return mass_amu * AMU
