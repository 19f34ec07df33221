"""Laser beam profiles and the fields a moving molecule experiences.

The transverse coordinate X is one-dimensional. A beam is described by its
focused Gaussian profile in X plus the temporal envelope produced by the
molecule's longitudinal flight through the (slanted) beam. Amplitude
envelope convention: exp(-X'^2/w0^2), so intensity falls as exp(-2X'^2/w0^2)
and w0 is the usual 1/e^2 intensity radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, EPSILON_0
from .errors import ConfigError


@dataclass
class FieldProfile:
    """One focused laser beam as the molecule sees it.

    center_t / sigma_t parametrize the temporal envelope in the molecule
    frame (its longitudinal motion carries it through the crossing).
    detuning is the one-photon detuning of this beam in rad/s, positive for
    the attractive (high-field-seeking) side used throughout.
    """

    role: str                    # "probe" or "control"
    power_w: float
    waist_m: float
    wavelength_m: float
    center_x_m: float
    center_t_s: float
    sigma_t_s: float
    detuning_rads: float = 0.0

    def __post_init__(self):
        if self.role not in ("probe", "control"):
            raise ConfigError(f"field role must be probe or control, got {self.role!r}")
        if self.power_w < 0:
            raise ConfigError("beam power must be non-negative")
        if self.waist_m <= 0:
            raise ConfigError("waist must be positive")
        if self.wavelength_m <= 0:
            raise ConfigError("wavelength must be positive")
        if self.sigma_t_s <= 0:
            raise ConfigError("temporal width must be positive")


@dataclass
class BeamGeometry:
    """Molecular beam / laser crossing geometry."""

    crossing_angle_rad: float
    longitudinal_velocity_mps: float
    focal_length_m: float = 0.1
    aperture_diameter_m: float = 6.3e-3

    def __post_init__(self):
        if not 0.0 < self.crossing_angle_rad < math.pi / 2:
            raise ConfigError("crossing angle must lie in (0, 90) degrees")
        if self.longitudinal_velocity_mps <= 0:
            raise ConfigError("longitudinal velocity must be positive")


def peak_intensity(profile: FieldProfile) -> float:
    """Peak intensity 2P/(pi w0^2) in W/m^2."""
    return 2.0 * profile.power_w / (math.pi * profile.waist_m**2)


def peak_amplitude(profile: FieldProfile) -> float:
    """Peak electric field amplitude sqrt(2 I0 / (c eps0)) in V/m."""
    return math.sqrt(2.0 * peak_intensity(profile) / (C_LIGHT * EPSILON_0))


def envelope(profile: FieldProfile, x_m, t_s):
    """Dimensionless amplitude envelope at transverse position X and time t.

    Separable: exp(-(X-cX)^2/w0^2) * exp(-(t-ct)^2/(2 sigma_t^2)).
    Equals 1 at (center_x, center_t) and never exceeds 1.
    """
    xr = (np.asarray(x_m, dtype=float) - profile.center_x_m) / profile.waist_m
    tr = (np.asarray(t_s, dtype=float) - profile.center_t_s) / profile.sigma_t_s
    out = np.exp(-xr * xr) * np.exp(-0.5 * tr * tr)
    if out.ndim == 0:
        return float(out)
    return out


def interaction_length(waist_m: float, crossing_angle_rad: float) -> float:
    """Projected overlap length waist / tan(angle) along the molecular beam."""
    if not 0.0 < crossing_angle_rad < math.pi / 2:
        raise ConfigError("crossing angle must lie in (0, 90) degrees")
    if waist_m <= 0:
        raise ConfigError("waist must be positive")
    return waist_m / math.tan(crossing_angle_rad)


def rayleigh_length(waist_m: float, wavelength_m: float) -> float:
    """pi w0^2 / lambda."""
    if waist_m <= 0 or wavelength_m <= 0:
        raise ConfigError("waist and wavelength must be positive")
    return math.pi * waist_m**2 / wavelength_m


def diffraction_limited_waist(wavelength_m: float, focal_length_m: float, aperture_diameter_m: float) -> float:
    """Focused waist estimate 4 lambda f / (pi D).

    Convention choice: the aperture diameter is taken as the 1/e^2 beam
    diameter at the lens and the full spot-size formula is quoted as the
    waist. Report alongside rayleigh_length(waist) when both are of interest.
    """
    if min(wavelength_m, focal_length_m, aperture_diameter_m) <= 0:
        raise ConfigError("wavelength, focal length and aperture must be positive")
    return 4.0 * wavelength_m * focal_length_m / (math.pi * aperture_diameter_m)


def sigma_t_from_geometry(waist_m: float, geometry: BeamGeometry) -> float:
    """Temporal envelope width implied by sweeping the waist at the crossing angle.

    The amplitude profile exp(-d^2/w0^2) swept at speed v_z tan(theta) maps to
    exp(-t^2/(2 sigma^2)) with sigma = w0 / (sqrt(2) v_z tan(theta)).
    """
    sweep = geometry.longitudinal_velocity_mps * math.tan(geometry.crossing_angle_rad)
    return waist_m / (math.sqrt(2.0) * sweep)


def molecule_frame_fields(
    probe: FieldProfile,
    control: FieldProfile,
    geometry: BeamGeometry,
    x_m,
    t_s,
    require_counterintuitive: bool = True,
):
    """Field amplitudes (V/m) of both beams at (X, t) in the molecule frame.

    With require_counterintuitive the control envelope must be centered
    earlier than the probe envelope (the molecule meets the control beam
    first); violating that ordering is a configuration error.
    """
    if require_counterintuitive and not control.center_t_s < probe.center_t_s:
        raise ConfigError(
            "counter-intuitive ordering violated: control.center_t must precede probe.center_t"
        )
    amp_p = peak_amplitude(probe) * envelope(probe, x_m, t_s)
    amp_c = peak_amplitude(control) * envelope(control, x_m, t_s)
    return amp_p, amp_c
