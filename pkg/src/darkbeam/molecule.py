"""Rovibrational level data, thermal populations, and Raman bookkeeping.

Spectroscopic constants live in cm^-1 (the natural lab unit for them);
everything downstream converts through `constants` at the point of use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import (
    AMU,
    C_LIGHT,
    K_BOLTZMANN,
    PLANCK,
    debye_to_cm,
    percm_to_mhz,
)
from .errors import ConfigError


@dataclass(frozen=True)
class RoLevel:
    """One rovibrational level: electronic manifold, vibrational and rotational numbers."""

    electronic: str  # "X" (ground) or "B" (excited intermediate)
    nu: int
    j: int

    def __post_init__(self):
        if self.electronic not in ("X", "B"):
            raise ConfigError(f"unknown electronic manifold {self.electronic!r}")
        if self.nu < 0 or self.j < 0:
            raise ConfigError(f"negative quantum number in {self}")


@dataclass
class MoleculeSpec:
    """Molecular constants for the beam species.

    Dipoles and the nu=1 rotational correction are not pinned by measured
    input data here; the shipped defaults in `lirb_spec` mark which values
    are placeholders.
    """

    name: str
    mass_kg: float
    b_e_percm: float                    # X-state rotational constant
    alpha_e_percm: float = 0.0          # B_nu = B_e - alpha_e * nu (X manifold)
    b_excited_percm: float | None = None   # B-state rotational constant; defaults to b_e
    alpha_excited_percm: float = 0.0
    vibrational_spacing_percm: float = 195.0
    excited_origin_percm: float = 17065.0
    dipole_ge_debye: float = 4.0        # probe leg, placeholder unless overridden
    dipole_se_debye: float = 4.0        # control leg, placeholder unless overridden
    temperature_k: float = 5.0
    j_max: int = 7

    def __post_init__(self):
        if self.mass_kg <= 0:
            raise ConfigError("mass must be positive")
        if self.b_e_percm <= 0:
            raise ConfigError("rotational constant must be positive")
        if self.b_excited_percm is None:
            self.b_excited_percm = self.b_e_percm
        if self.vibrational_spacing_percm <= 10.0 * self.b_e_percm:
            # rigid-rotor + harmonic bookkeeping below assumes well separated scales
            raise ConfigError(
                "vibrational spacing must exceed 10x the rotational constant"
            )

    @property
    def dipole_ge_cm(self) -> float:
        return debye_to_cm(self.dipole_ge_debye)

    @property
    def dipole_se_cm(self) -> float:
        return debye_to_cm(self.dipole_se_debye)

    def rotational_constant_percm(self, level: RoLevel) -> float:
        if level.electronic == "X":
            return self.b_e_percm - self.alpha_e_percm * level.nu
        return self.b_excited_percm - self.alpha_excited_percm * level.nu


def lirb_spec(**overrides) -> MoleculeSpec:
    """Default LiRb parameters.

    mass (7Li85Rb), vibrational spacing, B-state origin/constant and the
    4 Debye dipoles are assumed placeholders, not fitted values. alpha_e
    defaults to 0.0015 cm^-1 so adjacent-J Raman pairs are offset by the
    0.003 cm^-1 (90 MHz) scale that makes rotational selection meaningful.
    """
    params = dict(
        name="LiRb",
        mass_kg=91.9278 * AMU,
        b_e_percm=0.2158,
        alpha_e_percm=0.0015,
        vibrational_spacing_percm=195.0,
        excited_origin_percm=17065.0,
        dipole_ge_debye=4.0,
        dipole_se_debye=4.0,
        temperature_k=5.0,
        j_max=7,
    )
    params.update(overrides)
    return MoleculeSpec(**params)


def rotational_energy(spec: MoleculeSpec, level: RoLevel) -> float:
    """Level energy in cm^-1: electronic origin + nu * spacing + B_nu * J(J+1)."""
    origin = 0.0 if level.electronic == "X" else spec.excited_origin_percm
    b_nu = spec.rotational_constant_percm(level)
    return origin + spec.vibrational_spacing_percm * level.nu + b_nu * level.j * (level.j + 1)


def thermal_populations(spec: MoleculeSpec, temperature_k: float, j_max: int | None = None) -> np.ndarray:
    """Normalized rotational Boltzmann weights for nu=0, J = 0..j_max.

    p_J is proportional to (2J+1) exp(-h c B_e J(J+1) / kB T).
    """
    if temperature_k <= 0:
        raise ConfigError("temperature must be positive")
    if j_max is None:
        j_max = spec.j_max
    j = np.arange(j_max + 1, dtype=float)
    energy_j = spec.b_e_percm * j * (j + 1) * 100.0 * PLANCK * C_LIGHT
    weights = (2.0 * j + 1.0) * np.exp(-energy_j / (K_BOLTZMANN * temperature_k))
    total = weights.sum()
    if not math.isfinite(total) or total <= 0:
        raise ConfigError("thermal weights degenerate; check constants")
    return weights / total


def raman_partner(level: RoLevel, partner_delta_j: int = 0) -> RoLevel:
    """The nu=1 level paired with a nu=0 level by the two-photon transition."""
    j_partner = level.j + partner_delta_j
    if j_partner < 0:
        raise ConfigError(f"partner J would be negative for {level}")
    return RoLevel(level.electronic, level.nu + 1, j_partner)


def two_photon_offset(
    spec: MoleculeSpec,
    target: RoLevel,
    other: RoLevel,
    partner_delta_j: int = 0,
) -> float:
    """Two-photon detuning (MHz) felt by `other` when the lasers are resonant for `target`.

    Both levels must sit in the X manifold. The offset is the difference of
    Raman transition energies E(partner) - E(level) between the two states,
    signed so that a positive value means the lasers' difference frequency
    overshoots the other state's Raman gap.

    Antisymmetric under exchange of target and other.
    """
    for lv in (target, other):
        if lv.electronic != "X":
            raise ConfigError(f"two-photon offset defined within X manifold, got {lv}")
    gap_target = rotational_energy(spec, raman_partner(target, partner_delta_j)) - rotational_energy(spec, target)
    gap_other = rotational_energy(spec, raman_partner(other, partner_delta_j)) - rotational_energy(spec, other)
    return percm_to_mhz(gap_target - gap_other)
