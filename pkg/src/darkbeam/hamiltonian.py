"""Rotating-frame Hamiltonians for the three-level system and its extensions.

Basis order is fixed: index 0 = |g> (nu=0 target rotational level),
index 1 = |e> (intermediate excited level), index 2 = |s> (nu=1 Raman
partner), extra levels follow. Energies in rad/s.

Convention: H = Omega_p(|g><e| + h.c.) + Omega_c(|s><e| + h.c.)
              + delta_p |e><e| + delta_two |s><s|
with Omega = mu * eps / (2 hbar) and positive delta_p on the attractive
(red, high-field-seeking) side. Some treatments carry an extra factor 2 on
the couplings; set LevelSystem.coupling_scale = 2.0 to reproduce that
convention globally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR
from .errors import ConfigError


def rabi_frequency(dipole_cm: float, amplitude_vm: float) -> float:
    """Rabi frequency mu * eps / (2 hbar) in rad/s."""
    return dipole_cm * amplitude_vm / (2.0 * HBAR)


@dataclass(frozen=True)
class ExtraCoupling:
    """One field-driven coupling beyond the bare Lambda legs.

    i, j: level indices (i < j by convention). driven_by selects which
    laser's envelope scales it; ratio multiplies that laser's Lambda-leg
    Rabi frequency (dipole ratio of the extra line).
    """

    i: int
    j: int
    driven_by: str  # "probe" or "control"
    ratio: float = 1.0

    def __post_init__(self):
        if self.driven_by not in ("probe", "control"):
            raise ConfigError(f"coupling driver must be probe or control, got {self.driven_by!r}")
        if self.i < 0 or self.j <= self.i:
            raise ConfigError(f"coupling indices must satisfy 0 <= i < j, got ({self.i}, {self.j})")


@dataclass
class LevelSystem:
    """Level structure: detunings, decay, and the coupling topology.

    detunings[k] is level k's rotating-frame energy in rad/s
    (detunings[0] = 0, detunings[1] = delta_p, detunings[2] = delta_two).
    gamma_rads is the spontaneous width of the intermediate level, entering
    as -i gamma/2 on index 1. Optical angular frequencies are kept for
    counter-rotating corrections.
    """

    labels: list[str]
    detunings: np.ndarray
    gamma_rads: float = 0.0
    coupling_scale: float = 1.0
    extra_couplings: list[ExtraCoupling] = field(default_factory=list)
    optical_omega_p_rads: float = 0.0
    optical_omega_c_rads: float = 0.0
    mixing_ratio: float = 1.0

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        if len(self.labels) != self.detunings.size:
            raise ConfigError("labels and detunings must have matching length")
        if len(self.labels) < 3:
            raise ConfigError("a level system needs at least the three Lambda levels")
        if self.gamma_rads < 0:
            raise ConfigError("decay rate must be non-negative")
        for c in self.extra_couplings:
            if not (0 <= c.i < self.dim and 0 <= c.j < self.dim and c.i != c.j):
                raise ConfigError(f"coupling indices out of range: {c}")

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def delta_p(self) -> float:
        return float(self.detunings[1])

    @property
    def delta_two(self) -> float:
        return float(self.detunings[2])


@dataclass
class HamiltonianMatrix:
    """A built Hamiltonian with its Hermitian / anti-Hermitian split."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.matrix + self.matrix.conj().T)

    @property
    def anti_hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.matrix - self.matrix.conj().T)

    def is_hermitian(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.anti_hermitian_part)) <= tol)


def lambda_system(
    delta_p: float,
    delta_two: float,
    gamma_rads: float = 0.0,
    coupling_scale: float = 1.0,
    optical_omega_p_rads: float = 0.0,
    optical_omega_c_rads: float = 0.0,
) -> LevelSystem:
    """The bare three-level system. delta_two = delta_p - delta_c by definition."""
    return LevelSystem(
        labels=["g", "e", "s"],
        detunings=np.array([0.0, delta_p, delta_two]),
        gamma_rads=gamma_rads,
        coupling_scale=coupling_scale,
        optical_omega_p_rads=optical_omega_p_rads,
        optical_omega_c_rads=optical_omega_c_rads,
    )


def extended_system(
    n_levels: int,
    delta_p: float,
    delta_two: float,
    gamma_rads: float = 0.0,
    coupling_scale: float = 1.0,
    rotational_offset_rads: float = 2.4e11,
    anharmonic_offset_rads: float = 9.4e11,
    extra_ratio: float = 0.5,
    optical_omega_p_rads: float = 0.0,
    optical_omega_c_rads: float = 0.0,
) -> LevelSystem:
    """Extended 7/9/11-level system with a default ladder of extra levels.

    The ladder (a modeling choice, fully overridable by constructing
    LevelSystem directly):
      - intermediate-manifold rotational neighbors at delta_p +- k * offset,
        each coupled to |g> by the probe and to |s> by the control
        (second and further Lambda pathways);
      - for 9/11 levels, additional ground-manifold nu=2 levels near
        delta_two + anharmonic offset, coupled to |e> by the control.
    Extra coupling strengths default to ratio 0.5 of the main legs.
    """
    if n_levels not in (3, 7, 9, 11):
        raise ConfigError(f"supported model sizes are 3, 7, 9, 11; got {n_levels}")
    base = lambda_system(
        delta_p,
        delta_two,
        gamma_rads,
        coupling_scale,
        optical_omega_p_rads,
        optical_omega_c_rads,
    )
    if n_levels == 3:
        return base

    labels = list(base.labels)
    detunings = list(base.detunings)
    couplings: list[ExtraCoupling] = []

    def add_intermediate(k: int, sign: float):
        idx = len(labels)
        labels.append(f"e{'+' if sign > 0 else '-'}{k}")
        detunings.append(delta_p + sign * k * rotational_offset_rads)
        couplings.append(ExtraCoupling(0, idx, "probe", extra_ratio))
        couplings.append(ExtraCoupling(2, idx, "control", extra_ratio))

    def add_ground_vib(k: int):
        idx = len(labels)
        labels.append(f"s{k}")
        detunings.append(delta_two + anharmonic_offset_rads + (k - 1) * rotational_offset_rads)
        couplings.append(ExtraCoupling(1, idx, "control", extra_ratio))

    # 7 levels: four extra intermediates bracketing the main line
    add_intermediate(1, +1.0)
    add_intermediate(1, -1.0)
    add_intermediate(2, +1.0)
    add_intermediate(2, -1.0)
    if n_levels >= 9:
        add_ground_vib(1)
        add_intermediate(3, +1.0)
    if n_levels == 11:
        add_ground_vib(2)
        add_intermediate(3, -1.0)

    return LevelSystem(
        labels=labels,
        detunings=np.array(detunings),
        gamma_rads=gamma_rads,
        coupling_scale=coupling_scale,
        extra_couplings=couplings,
        optical_omega_p_rads=optical_omega_p_rads,
        optical_omega_c_rads=optical_omega_c_rads,
    )


def _base_matrix(system: LevelSystem) -> np.ndarray:
    h = np.zeros((system.dim, system.dim), dtype=complex)
    h[np.arange(system.dim), np.arange(system.dim)] = system.detunings
    if system.gamma_rads > 0:
        h[1, 1] -= 0.5j * system.gamma_rads
    return h


def build_lambda(system: LevelSystem, omega_p: float, omega_c: float) -> HamiltonianMatrix:
    """Three-level Hamiltonian at instantaneous Rabi frequencies (rad/s)."""
    if system.dim != 3:
        raise ConfigError(f"build_lambda requires a 3-level system, got dim {system.dim}")
    s = system.coupling_scale
    h = _base_matrix(system)
    h[0, 1] = h[1, 0] = s * omega_p
    h[1, 2] = h[2, 1] = s * omega_c
    return HamiltonianMatrix(h)


def build_extended(
    system: LevelSystem,
    omega_p: float,
    omega_c: float,
    counter_rotating: bool = False,
    pulse_mixing: bool = False,
) -> HamiltonianMatrix:
    """Hamiltonian with optional extra levels, pulse mixing, and static
    counter-rotating (Bloch-Siegert) shifts.

    With a 3-level system and both options off this reduces exactly to
    build_lambda. Pulse mixing adds the probe on the control leg and vice
    versa (strength mixing_ratio times the other leg's Rabi frequency); in
    this static builder the mixing terms enter without their delta_two-scale
    oscillation, which the time-dependent propagator restores. The
    counter-rotating option adds the level-pair repulsion Omega^2/(delta+2w)
    of the +-2w sectors to the diagonal; explicit oscillating terms are a
    propagator-only feature.
    """
    s = system.coupling_scale
    if system.dim == 3 and not counter_rotating and not pulse_mixing and not system.extra_couplings:
        return build_lambda(system, omega_p, omega_c)

    h = _base_matrix(system)
    h[0, 1] = h[1, 0] = s * omega_p
    h[1, 2] = h[2, 1] = s * omega_c
    for c in system.extra_couplings:
        amp = s * c.ratio * (omega_p if c.driven_by == "probe" else omega_c)
        h[c.i, c.j] += amp
        h[c.j, c.i] += amp

    if pulse_mixing:
        h[1, 2] += s * system.mixing_ratio * omega_p
        h[2, 1] += s * system.mixing_ratio * omega_p
        h[0, 1] += s * system.mixing_ratio * omega_c
        h[1, 0] += s * system.mixing_ratio * omega_c

    if counter_rotating:
        if system.optical_omega_p_rads <= 0 or system.optical_omega_c_rads <= 0:
            raise ConfigError("counter-rotating shifts need optical frequencies on the system")
        wp = system.optical_omega_p_rads
        wc = system.optical_omega_c_rads
        op = s * omega_p
        oc = s * omega_c
        h[0, 0] -= op**2 / (system.delta_p + 2.0 * wp)
        h[1, 1] += op**2 / (system.delta_p + 2.0 * wp)
        h[1, 1] += oc**2 / (system.delta_p - system.delta_two + 2.0 * wc)
        h[2, 2] -= oc**2 / (system.delta_p - system.delta_two + 2.0 * wc)

    return HamiltonianMatrix(h)


def coupling_channels(system: LevelSystem, pulse_mixing: bool = False):
    """Decompose H(t) = H0 + a_p(t) Kp + a_c(t) Kc for the propagator.

    Returns (H0, Kp, Kc, Mp, Mc): constant part, the two coupling patterns
    scaled per unit Lambda-leg Rabi frequency, and the pulse-mixing patterns
    (zero matrices when mixing is off). Mixing terms are kept separate so
    the propagator can attach their delta_two-scale phase factors.
    """
    n = system.dim
    h0 = _base_matrix(system)
    kp = np.zeros((n, n))
    kc = np.zeros((n, n))
    s = system.coupling_scale
    kp[0, 1] = kp[1, 0] = s
    kc[1, 2] = kc[2, 1] = s
    for c in system.extra_couplings:
        target = kp if c.driven_by == "probe" else kc
        target[c.i, c.j] += s * c.ratio
        target[c.j, c.i] += s * c.ratio
    mp = np.zeros((n, n))
    mc = np.zeros((n, n))
    if pulse_mixing:
        mp[1, 2] = mp[2, 1] = s * system.mixing_ratio
        mc[0, 1] = mc[1, 0] = s * system.mixing_ratio
    return h0, kp, kc, mp, mc
