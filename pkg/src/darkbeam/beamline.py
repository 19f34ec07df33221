"""Slit-collimated molecular beam crossing the dressing lasers.

Geometry: three slits on a common axis, the laser station between slits 2
and 3. The transverse coordinate x is absolute; laser offsets live in the
field profiles. Molecules drift ballistically outside the interaction
window and feel the tracked-branch dipole force inside it.

The force tables are per rotational level: each level sees the same lasers
at its own two-photon offset, so the level tuned to zero offset rides the
dark branch and crosses undeflected while every other level rides a
trapping branch and is steered off the slit-3 axis.

The field envelope is static in the lab, so a molecule's position along
the beam maps onto the surface time axis through the nominal velocity:
tau = (z - z_laser) / v_nominal. Faster molecules cross the same spatial
profile in less time; the per-molecule time step dz / v_z captures that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import C_LIGHT, HBAR, mhz_to_rads
from .dressed import PotentialSurface, force_grid, potential_surface
from .errors import ConfigError, NumericError
from .fields import BeamGeometry, FieldProfile
from .hamiltonian import lambda_system
from .molecule import MoleculeSpec, RoLevel, thermal_populations, two_photon_offset

OUTCOME_PASSED = 0
OUTCOME_BLOCKED_SLIT2 = 1
OUTCOME_BLOCKED_SLIT3 = 2
OUTCOME_DEFLECTED_OUT = 3
OUTCOME_LABELS = ("passed", "blocked_slit2", "blocked_slit3", "deflected_out")

SEPARATION_SENTINEL = 1e12


@dataclass(frozen=True)
class SlitGeometry:
    """Three collimation slits: z positions, full widths, center offsets."""

    z_m: tuple[float, float, float] = (0.0, 1.0, 2.52)
    width_m: tuple[float, float, float] = (4e-6, 4e-6, 4e-6)
    center_m: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        if len(self.z_m) != 3 or len(self.width_m) != 3 or len(self.center_m) != 3:
            raise ConfigError("slit geometry needs exactly three slits")
        if not (self.z_m[0] < self.z_m[1] < self.z_m[2]):
            raise ConfigError("slit positions must be strictly increasing")
        if any(w <= 0 for w in self.width_m):
            raise ConfigError("slit widths must be positive")


@dataclass
class Ensemble:
    """Struct-of-arrays sample of molecules at the first slit."""

    x_m: np.ndarray
    v_t_mps: np.ndarray
    v_z_mps: np.ndarray
    level_j: np.ndarray
    weight: np.ndarray
    seed: int

    @property
    def size(self) -> int:
        return self.x_m.size


def doppler_spread(velocity_spread_mps: float) -> float:
    """Fractional first-order Doppler width delta_v / c."""
    return velocity_spread_mps / C_LIGHT


def depth_separation_ratio(
    depth_rads: float,
    mass_kg: float,
    v_transverse_mps: float,
    margin: float = 5.0,
) -> float:
    """Trap depth over transverse kinetic energy, with a design margin.

    Returns hbar * depth / (margin * m v_t^2 / 2); capture wants >= 1.
    A vanishing transverse velocity makes the ratio diverge, so it is
    capped at SEPARATION_SENTINEL.
    """
    if mass_kg <= 0:
        raise ConfigError("mass must be positive")
    if margin <= 0:
        raise ConfigError("margin must be positive")
    kinetic = 0.5 * mass_kg * v_transverse_mps**2
    if kinetic <= 0:
        return SEPARATION_SENTINEL
    return min(HBAR * abs(depth_rads) / (margin * kinetic), SEPARATION_SENTINEL)


@dataclass(frozen=True)
class SeparationCheck:
    ratio: float
    satisfied: bool


def separation_criterion(
    omega_max_rads: float,
    delta_rads: float,
    mass_kg: float,
    v_transverse_mps: float,
    margin: float = 5.0,
) -> SeparationCheck:
    """Deflection-capture check: light-shift depth vs transverse kinetic energy.

    The dispersive well depth is Omega_max^2 / delta (rad/s); the check
    passes when hbar times that depth exceeds margin * m v_t^2 / 2.
    """
    if delta_rads == 0:
        raise ConfigError("one-photon detuning must be nonzero for the dispersive depth")
    depth = omega_max_rads**2 / abs(delta_rads)
    ratio = depth_separation_ratio(depth, mass_kg, v_transverse_mps, margin)
    return SeparationCheck(ratio=ratio, satisfied=bool(ratio > 1.0))


def sample_ensemble(
    spec: MoleculeSpec,
    slits: SlitGeometry,
    n: int,
    seed: int,
    v_z_mean_mps: float = 500.0,
    v_z_sigma_mps: float = 50.0,
    j_max: int | None = None,
    level_weights: np.ndarray | None = None,
) -> Ensemble:
    """Draw molecules at slit 1.

    Positions are uniform across the slit; the transverse velocity spread
    is the geometric acceptance of the slit-1/slit-2 pair folded into a
    Gaussian, sigma = v_z (w1 + w2) / (4 L12). Longitudinal velocities are
    a truncated normal (resampled below v_z_mean / 5). Internal levels
    follow the thermal weights unless level_weights overrides them (the
    two-state resolution demo populates synthetic levels evenly).
    """
    if n <= 0:
        raise ConfigError("ensemble size must be positive")
    if v_z_mean_mps <= 0 or v_z_sigma_mps < 0:
        raise ConfigError("longitudinal velocity parameters out of range")
    rng = np.random.default_rng(seed)
    w1, w2 = slits.width_m[0], slits.width_m[1]
    l12 = slits.z_m[1] - slits.z_m[0]
    x = slits.center_m[0] + rng.uniform(-0.5 * w1, 0.5 * w1, size=n)
    sigma_vt = v_z_mean_mps * (w1 + w2) / (4.0 * l12)
    v_t = rng.normal(0.0, sigma_vt, size=n)
    v_z = rng.normal(v_z_mean_mps, v_z_sigma_mps, size=n)
    floor = v_z_mean_mps / 5.0
    for _ in range(100):
        bad = v_z < floor
        if not np.any(bad):
            break
        v_z[bad] = rng.normal(v_z_mean_mps, v_z_sigma_mps, size=int(bad.sum()))
    else:
        raise NumericError("longitudinal velocity resampling did not converge")
    if level_weights is not None:
        pops = np.asarray(level_weights, dtype=float)
        if pops.ndim != 1 or pops.size == 0 or np.any(pops < 0):
            raise ConfigError("level weights must be a non-negative 1-D array")
        total = pops.sum()
        if total <= 0:
            raise ConfigError("level weights must not all vanish")
        pops = pops / total
    else:
        jm = spec.j_max if j_max is None else j_max
        pops = thermal_populations(spec, spec.temperature_k, jm)
    level_j = rng.choice(pops.size, size=n, p=pops)
    return Ensemble(
        x_m=x,
        v_t_mps=v_t,
        v_z_mps=v_z,
        level_j=level_j.astype(np.int64),
        weight=np.full(n, 1.0 / n),
        seed=seed,
    )


@dataclass
class ForceTable:
    """Per-level force grids sharing one (x, tau) mesh."""

    x_grid: np.ndarray
    t_grid: np.ndarray
    levels: np.ndarray                  # rotational quantum numbers, sorted
    forces: np.ndarray                  # (n_levels, nx, nt) newtons
    offsets_rads: np.ndarray            # two-photon offset per level
    depths_rads: np.ndarray             # full-amplitude trap depth per level
    surfaces: dict[int, PotentialSurface] = field(default_factory=dict, repr=False)

    def level_row(self, j: int) -> int:
        idx = np.searchsorted(self.levels, j)
        if idx >= self.levels.size or self.levels[idx] != j:
            raise ConfigError(f"no force table entry for J={j}")
        return int(idx)


def force_table_from_offsets(
    offsets_rads: np.ndarray | list[float],
    levels: np.ndarray | list[int],
    probe: FieldProfile,
    control: FieldProfile,
    geometry: BeamGeometry,
    delta_p_rads: float,
    dipole_ge_cm: float,
    dipole_se_cm: float,
    x_grid: np.ndarray,
    t_grid: np.ndarray,
    labels: list[str] | None = None,
) -> ForceTable:
    """Force grids for an explicit list of two-photon offsets.

    Levels are arbitrary integer tags here (the resolution demo uses 0/1
    for its two synthetic hyperfine states); each tag's surface is the
    ground-connected branch at its own offset.
    """
    levels = np.asarray([int(j) for j in levels], dtype=np.int64)
    offsets = np.asarray(offsets_rads, dtype=float)
    if levels.size != offsets.size:
        raise ConfigError("levels and offsets must pair up one-to-one")
    if np.unique(levels).size != levels.size:
        raise ConfigError("level tags must be unique")
    order = np.argsort(levels)
    levels = levels[order]
    offsets = offsets[order]
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    forces = np.empty((levels.size, x_grid.size, t_grid.size))
    depths = np.empty(levels.size)
    surfaces: dict[int, PotentialSurface] = {}
    for row, j in enumerate(levels):
        label = labels[order[row]] if labels is not None else f"level {int(j)}"
        system = lambda_system(delta_p=delta_p_rads, delta_two=float(offsets[row]))
        surface = potential_surface(
            system, probe, control, geometry,
            dipole_ge_cm, dipole_se_cm,
            state_index=0, x_grid=x_grid, t_grid=t_grid,
            label=label,
        )
        forces[row] = force_grid(surface)
        # operational depth: deepest point the tracked branch reaches on the
        # grid. A bare-to-full-field jump has no adiabatic meaning at zero
        # offset (the ground level splits evenly into dark and bright), so
        # the depth must come from the time-ordered surface itself.
        depths[row] = max(0.0, -float(surface.energies.min()))
        surfaces[int(j)] = surface
    return ForceTable(
        x_grid=x_grid,
        t_grid=t_grid,
        levels=levels,
        forces=forces,
        offsets_rads=offsets,
        depths_rads=depths,
        surfaces=surfaces,
    )


def build_force_table(
    spec: MoleculeSpec,
    target: RoLevel,
    probe: FieldProfile,
    control: FieldProfile,
    geometry: BeamGeometry,
    delta_p_rads: float,
    levels: np.ndarray | list[int],
    x_grid: np.ndarray,
    t_grid: np.ndarray,
    partner_delta_j: int = 0,
) -> ForceTable:
    """Tracked-branch force grids for every populated rotational level.

    Each level J gets the Lambda system at its own two-photon offset
    relative to the target tuning and the branch that starts on the bare
    ground level. The target's offset is zero by construction, making its
    branch the dark one.
    """
    levels = np.asarray(sorted(set(int(j) for j in levels)), dtype=np.int64)
    offsets = np.array([
        mhz_to_rads(two_photon_offset(spec, target, RoLevel(target.electronic, target.nu, int(j)), partner_delta_j))
        for j in levels
    ])
    return force_table_from_offsets(
        offsets, levels, probe, control, geometry, delta_p_rads,
        spec.dipole_ge_cm, spec.dipole_se_cm, x_grid, t_grid,
        labels=[f"J={int(j)}" for j in levels],
    )


@dataclass
class TrajectoryResult:
    """Vectorized outcome record for one propagated ensemble."""

    outcome: np.ndarray                # int codes, OUTCOME_LABELS order
    x_slit2_m: np.ndarray
    x_slit3_m: np.ndarray
    kick_mps: np.ndarray               # transverse velocity change in the window
    ensemble: Ensemble
    window_tau_s: np.ndarray | None = None   # sample times of recorded paths
    window_x_m: np.ndarray | None = None     # (n_tau, n_recorded) positions
    recorded: np.ndarray | None = None       # molecule indices of the columns


def propagate_ensemble(
    ensemble: Ensemble,
    slits: SlitGeometry,
    laser_z_m: float,
    table: ForceTable,
    mass_kg: float,
    v_nominal_mps: float = 500.0,
    dt_s: float = 4e-9,
    record_indices: np.ndarray | None = None,
) -> TrajectoryResult:
    """March the whole ensemble: drift, slit cuts, in-window velocity Verlet.

    The window is the spatial footprint of the force table's time axis,
    z = laser_z + v_nominal * tau. Molecules leaving the x grid inside the
    window are scored deflected_out; the grid force is undefined there, so
    they are frozen force-free and never counted as passed.
    """
    z1, z2, z3 = slits.z_m
    if not z2 < laser_z_m < z3:
        raise ConfigError("laser station must sit between slits 2 and 3")
    if mass_kg <= 0 or v_nominal_mps <= 0 or dt_s <= 0:
        raise ConfigError("mass, nominal velocity, and dt must be positive")
    tau0, tau1 = table.t_grid[0], table.t_grid[-1]
    za = laser_z_m + v_nominal_mps * tau0
    zb = laser_z_m + v_nominal_mps * tau1
    if za <= z2 or zb >= z3:
        raise ConfigError("interaction window overlaps a slit; shrink the time grid")

    n = ensemble.size
    x = ensemble.x_m.copy()
    v = ensemble.v_t_mps.copy()
    vz = ensemble.v_z_mps
    outcome = np.full(n, OUTCOME_PASSED, dtype=np.int64)

    # slit 1 -> slit 2
    x = x + v * (z2 - z1) / vz
    x_slit2 = x.copy()
    blocked2 = np.abs(x - slits.center_m[1]) > 0.5 * slits.width_m[1]
    outcome[blocked2] = OUTCOME_BLOCKED_SLIT2

    # slit 2 -> window entry
    x = x + v * (za - z2) / vz
    v_entry = v.copy()

    mol_row = np.searchsorted(table.levels, ensemble.level_j)
    if np.any(mol_row >= table.levels.size) or np.any(
        table.levels[np.clip(mol_row, 0, table.levels.size - 1)] != ensemble.level_j
    ):
        raise ConfigError("ensemble contains levels missing from the force table")

    alive = ~blocked2
    xg, tg = table.x_grid, table.t_grid
    dx = xg[1] - xg[0]
    dtau = tg[1] - tg[0]
    if not (np.allclose(np.diff(xg), dx, rtol=1e-9) and np.allclose(np.diff(tg), dtau, rtol=1e-9)):
        raise ConfigError("force table grids must be uniform for interpolation")

    dz = v_nominal_mps * dt_s
    n_steps = int(np.ceil((zb - za) / dz))
    dt_i = dz / vz                      # per-molecule time step across common dz

    def interp_force(xq: np.ndarray, tau: float, active: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        fx = (xq - xg[0]) / dx
        ix = np.floor(fx).astype(np.int64)
        inside = active & (ix >= 0) & (ix < xg.size - 1)
        ft = (tau - tg[0]) / dtau
        it = int(np.clip(np.floor(ft), 0, tg.size - 2))
        wt = ft - it
        out = np.zeros_like(xq)
        ii = ix[inside]
        wx = fx[inside] - ii
        r = mol_row[inside]
        f00 = table.forces[r, ii, it]
        f10 = table.forces[r, ii + 1, it]
        f01 = table.forces[r, ii, it + 1]
        f11 = table.forces[r, ii + 1, it + 1]
        out[inside] = (1 - wx) * ((1 - wt) * f00 + wt * f01) + wx * ((1 - wt) * f10 + wt * f11)
        return out, inside

    if record_indices is not None:
        record_indices = np.asarray(record_indices, dtype=np.int64)
        if record_indices.size and (record_indices.min() < 0 or record_indices.max() >= n):
            raise ConfigError("record indices out of ensemble range")
        rec_tau = np.empty(n_steps + 1)
        rec_x = np.empty((n_steps + 1, record_indices.size))
        rec_tau[0] = tau0
        rec_x[0] = x[record_indices]
    else:
        rec_tau = rec_x = None

    f_now, inside = interp_force(x, tau0, alive)
    escaped = alive & ~inside
    outcome[escaped] = OUTCOME_DEFLECTED_OUT
    alive &= inside
    for k in range(n_steps):
        tau_next = min(tau0 + (k + 1) * (dz / v_nominal_mps), tau1)
        a_now = f_now / mass_kg
        x = np.where(alive, x + v * dt_i + 0.5 * a_now * dt_i**2, x)
        f_next, inside = interp_force(x, tau_next, alive)
        escaped = alive & ~inside
        outcome[escaped] = OUTCOME_DEFLECTED_OUT
        alive &= inside
        v = np.where(alive, v + 0.5 * (f_now + f_next) / mass_kg * dt_i, v)
        f_now = f_next
        if rec_x is not None:
            rec_tau[k + 1] = tau_next
            rec_x[k + 1] = x[record_indices]

    kick = v - v_entry
    # window exit -> slit 3 (blocked-at-slit-2 molecules keep their frozen x)
    z_end = za + n_steps * dz
    survivors = outcome != OUTCOME_BLOCKED_SLIT2
    x = np.where(survivors, x + v * (z3 - z_end) / vz, x)
    x_slit3 = x.copy()
    blocked3 = survivors & (outcome == OUTCOME_PASSED) & (
        np.abs(x - slits.center_m[2]) > 0.5 * slits.width_m[2]
    )
    outcome[blocked3] = OUTCOME_BLOCKED_SLIT3

    return TrajectoryResult(
        outcome=outcome,
        x_slit2_m=x_slit2,
        x_slit3_m=x_slit3,
        kick_mps=kick,
        ensemble=ensemble,
        window_tau_s=rec_tau,
        window_x_m=rec_x,
        recorded=record_indices,
    )


@dataclass
class PurificationReport:
    """Aggregate of one beamline run: who passed, how pure, how separated."""

    target_j: int
    levels: np.ndarray
    sampled: np.ndarray                # weight sums per level
    passed: np.ndarray
    blocked_slit2: np.ndarray
    blocked_slit3: np.ndarray
    deflected_out: np.ndarray
    purity: float | None
    target_yield: float
    offsets_rads: np.ndarray
    depths_rads: np.ndarray
    separation_ratios: np.ndarray
    kick_rms_mps: np.ndarray
    kick_max_mps: np.ndarray
    doppler_fractional: float
    n_molecules: int
    seed: int

    def outcome_totals(self) -> dict[str, float]:
        return {
            "passed": float(self.passed.sum()),
            "blocked_slit2": float(self.blocked_slit2.sum()),
            "blocked_slit3": float(self.blocked_slit3.sum()),
            "deflected_out": float(self.deflected_out.sum()),
        }


def purification_report(
    spec: MoleculeSpec,
    target: RoLevel,
    slits: SlitGeometry,
    probe: FieldProfile,
    control: FieldProfile,
    geometry: BeamGeometry,
    delta_p_rads: float,
    laser_z_m: float,
    n: int,
    seed: int,
    v_z_mean_mps: float = 500.0,
    v_z_sigma_mps: float = 50.0,
    x_grid: np.ndarray | None = None,
    t_grid: np.ndarray | None = None,
    table: ForceTable | None = None,
    dt_s: float = 4e-9,
    partner_delta_j: int = 0,
    separation_margin: float = 5.0,
) -> tuple[PurificationReport, TrajectoryResult, ForceTable]:
    """Run the full purification chain and aggregate per-level outcomes.

    purity = target weight passed / total weight passed (None if nothing
    passes); target_yield = target weight passed / target weight sampled.
    """
    if target.electronic != "X" or target.nu != 0:
        raise ConfigError("target must be a ground-manifold v=0 level")
    ensemble = sample_ensemble(spec, slits, n, seed, v_z_mean_mps, v_z_sigma_mps)
    levels = np.arange(0, spec.j_max + 1)
    if x_grid is None:
        x_grid = np.linspace(-40e-6, 40e-6, 201)
    if t_grid is None:
        half = 4.5 * max(probe.sigma_t_s, control.sigma_t_s) + max(
            abs(probe.center_t_s), abs(control.center_t_s)
        )
        t_grid = np.linspace(-half, half, 181)
    if table is None:
        table = build_force_table(
            spec, target, probe, control, geometry, delta_p_rads,
            levels, x_grid, t_grid, partner_delta_j,
        )
    result = propagate_ensemble(
        ensemble, slits, laser_z_m, table, spec.mass_kg, v_z_mean_mps, dt_s,
    )
    sigma_vt = v_z_mean_mps * (slits.width_m[0] + slits.width_m[1]) / (
        4.0 * (slits.z_m[1] - slits.z_m[0])
    )
    report = score_purification(
        result, table, target.j, spec.mass_kg, sigma_vt,
        v_z_sigma_mps, separation_margin,
    )
    return report, result, table


def score_purification(
    result: TrajectoryResult,
    table: ForceTable,
    target_level: int,
    mass_kg: float,
    sigma_vt_mps: float,
    v_z_sigma_mps: float,
    separation_margin: float = 5.0,
) -> PurificationReport:
    """Aggregate one propagated ensemble into per-level statistics."""
    ensemble = result.ensemble
    nl = table.levels.size
    sampled = np.zeros(nl)
    passed = np.zeros(nl)
    b2 = np.zeros(nl)
    b3 = np.zeros(nl)
    dout = np.zeros(nl)
    kick_rms = np.zeros(nl)
    kick_max = np.zeros(nl)
    for row, j in enumerate(table.levels):
        sel = ensemble.level_j == j
        w = ensemble.weight[sel]
        sampled[row] = w.sum()
        oc = result.outcome[sel]
        passed[row] = w[oc == OUTCOME_PASSED].sum()
        b2[row] = w[oc == OUTCOME_BLOCKED_SLIT2].sum()
        b3[row] = w[oc == OUTCOME_BLOCKED_SLIT3].sum()
        dout[row] = w[oc == OUTCOME_DEFLECTED_OUT].sum()
        kicks = result.kick_mps[sel & (result.outcome != OUTCOME_BLOCKED_SLIT2)]
        kick_rms[row] = float(np.sqrt(np.mean(kicks**2))) if kicks.size else 0.0
        kick_max[row] = float(np.max(np.abs(kicks))) if kicks.size else 0.0

    total_passed = passed.sum()
    t_row = table.level_row(target_level)
    purity = float(passed[t_row] / total_passed) if total_passed > 0 else None
    target_yield = float(passed[t_row] / sampled[t_row]) if sampled[t_row] > 0 else 0.0

    ratios = np.array([
        depth_separation_ratio(d, mass_kg, sigma_vt_mps, separation_margin)
        for d in table.depths_rads
    ])

    return PurificationReport(
        target_j=int(target_level),
        levels=table.levels.copy(),
        sampled=sampled,
        passed=passed,
        blocked_slit2=b2,
        blocked_slit3=b3,
        deflected_out=dout,
        purity=purity,
        target_yield=target_yield,
        offsets_rads=table.offsets_rads.copy(),
        depths_rads=table.depths_rads.copy(),
        separation_ratios=ratios,
        kick_rms_mps=kick_rms,
        kick_max_mps=kick_max,
        doppler_fractional=doppler_spread(v_z_sigma_mps),
        n_molecules=ensemble.size,
        seed=ensemble.seed,
    )
