"""Dressed states, adiabatic branch tracking, potential surfaces, forces.

A PotentialSurface is the adiabatic energy of one tracked branch sampled on
an (X, t) grid, together with the tracked eigenvectors and enough context to
re-solve the system off-grid (needed for finite-difference forces and the
Hellmann-Feynman cross-check).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .constants import HBAR
from .errors import ConfigError, NumericError, StepRefinementNeeded
from .fields import BeamGeometry, FieldProfile, envelope, peak_amplitude
from .hamiltonian import (
    HamiltonianMatrix,
    LevelSystem,
    build_extended,
    coupling_channels,
    rabi_frequency,
)

DARK_EIGENVALUE_REL_TOL = 1e-10
# Cluster handling must engage only where the eigensolver cannot resolve the
# gap (noise is ~ eps * |H|, around 1e-14 relative). A looser threshold makes
# the tracker freeze orientations across gaps that are physically resolved,
# which shows up as spurious structure on an exactly flat branch.
DEGENERACY_REL_TOL = 1e-12
AMBIGUITY_TOL = 1e-3
OVERLAP_WARN = 0.5


@dataclass
class DressedSolution:
    """Eigen solution at one (X, t) sample.

    eigensystem() returns branches ascending by real part;
    track_adiabatic() returns them reordered to follow the previous
    solution's branches (branch_ordered = True).
    """

    eigenvalues: np.ndarray          # rad/s (real for Hermitian input)
    eigenvectors: np.ndarray         # columns, phase-continuous once tracked
    dark_index: int | None = None
    x_m: float | None = None
    t_s: float | None = None
    branch_ordered: bool = False


def _dark_index_of(eigenvalues: np.ndarray, scale: float) -> int | None:
    if scale <= 0:
        return None
    hits = np.flatnonzero(np.abs(eigenvalues) < DARK_EIGENVALUE_REL_TOL * scale)
    if hits.size == 1:
        return int(hits[0])
    return None


def eigensystem(h: HamiltonianMatrix, x_m: float | None = None, t_s: float | None = None) -> DressedSolution:
    """Diagonalize one Hamiltonian sample; branches sorted ascending by real part."""
    m = h.matrix
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    try:
        if np.max(np.abs(h.anti_hermitian_part)) == 0.0:
            vals, vecs = np.linalg.eigh(m)
            vals = vals.astype(float)
            vecs = vecs.astype(complex)
        else:
            vals_c, vecs = np.linalg.eig(m)
            order = np.argsort(vals_c.real, kind="stable")
            vals, vecs = vals_c[order], vecs[:, order]
            vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"diagonalization failed: {exc}\nmatrix:\n{m!r}") from exc
    resid = np.max(np.abs(m @ vecs - vecs * vals))
    if scale > 0 and resid > 1e-8 * scale:
        raise NumericError(f"eigen residual {resid:.3e} exceeds tolerance; matrix:\n{m!r}")
    return DressedSolution(
        eigenvalues=np.real_if_close(vals),
        eigenvectors=vecs,
        dark_index=_dark_index_of(np.atleast_1d(vals).real, scale),
        x_m=x_m,
        t_s=t_s,
    )


def dark_state(omega_p: float, omega_c: float) -> np.ndarray:
    """Normalized zero-energy superposition (Omega_c, 0, -Omega_p) of the Lambda system."""
    norm = np.hypot(omega_p, omega_c)
    if norm == 0:
        raise ConfigError("dark state undefined with both couplings zero")
    return np.array([omega_c, 0.0, -omega_p]) / norm


def bare_solution(system: LevelSystem) -> DressedSolution:
    """Field-free reference: bare levels in basis order, used to seed tracking."""
    n = system.dim
    return DressedSolution(
        eigenvalues=system.detunings.astype(float).copy(),
        eigenvectors=np.eye(n, dtype=complex),
        branch_ordered=True,
    )


def _degenerate_clusters(eigenvalues: np.ndarray) -> list[list[int]]:
    vals = eigenvalues.real
    scale = max(1.0, float(np.max(np.abs(vals))))
    order = np.argsort(vals, kind="stable")
    clusters: list[list[int]] = []
    current = [int(order[0])]
    for a, b in zip(order[:-1], order[1:]):
        if abs(vals[b] - vals[a]) <= DEGENERACY_REL_TOL * scale:
            current.append(int(b))
        else:
            clusters.append(current)
            current = [int(b)]
    clusters.append(current)
    return clusters


def track_adiabatic(previous: DressedSolution, current: DressedSolution) -> DressedSolution:
    """Reorder `current` so branch k continues `previous` branch k.

    Assignment maximizes total squared overlap. Near-degenerate eigenvalue
    clusters are aligned by rotating the degenerate subspace onto the
    previous vectors (raw overlaps are meaningless inside a degenerate
    block). A genuinely ambiguous non-degenerate assignment raises
    StepRefinementNeeded so the caller can subdivide the step.
    """
    u_prev = previous.eigenvectors
    v = current.eigenvectors.copy()
    vals = np.array(current.eigenvalues, copy=True)
    n = v.shape[1]

    clusters = _degenerate_clusters(vals)
    cluster_of = np.empty(n, dtype=int)
    for ci, members in enumerate(clusters):
        for m in members:
            cluster_of[m] = ci
    for members in clusters:
        if len(members) < 2:
            continue
        block = v[:, members]
        coeff = block.conj().T @ u_prev          # prev vectors in cluster coordinates
        # pick the prev vectors living mostly in this subspace
        weights = np.linalg.norm(coeff, axis=0)
        chosen = np.sort(np.argsort(weights)[::-1][: len(members)])
        q, _ = np.linalg.qr(coeff[:, chosen])
        v[:, members] = block @ q
        # Rayleigh quotient of each rotated vector, not the cluster mean:
        # an exact eigenvalue (the dark zero) must survive the rotation.
        vals[members] = (np.abs(q.T) ** 2) @ vals[members]

    overlap = u_prev.conj().T @ v
    p = np.abs(overlap) ** 2

    # fast path: row-wise argmax already a permutation
    guess = np.argmax(p, axis=1)
    if np.unique(guess).size == n:
        assign = guess
    else:
        rows, cols = linear_sum_assignment(-p)
        assign = np.empty(n, dtype=int)
        assign[rows] = cols

    for i in range(n):
        row = p[i]
        top = np.sort(row)[::-1]
        if (
            n > 1
            and top[0] - top[1] < AMBIGUITY_TOL
            and cluster_of[int(assign[i])] != cluster_of[int(np.argsort(row)[::-1][1])]
        ):
            raise StepRefinementNeeded(
                f"branch {i} overlaps ambiguous ({top[0]:.6f} vs {top[1]:.6f}); refine the step"
            )
        if row[assign[i]] < OVERLAP_WARN:
            warnings.warn(
                f"adiabatic tracking overlap {row[assign[i]]:.3f} below {OVERLAP_WARN} for branch {i}",
                RuntimeWarning,
                stacklevel=2,
            )

    v = v[:, assign]
    vals = vals[assign]
    phases = overlap[np.arange(n), assign]
    unit = np.ones_like(phases)
    nz = np.abs(phases) > 0
    unit[nz] = phases[nz] / np.abs(phases[nz])
    v = v * unit.conj()[np.newaxis, :]

    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    return DressedSolution(
        eigenvalues=vals,
        eigenvectors=v,
        dark_index=_dark_index_of(vals.real, scale),
        x_m=current.x_m,
        t_s=current.t_s,
        branch_ordered=True,
    )


@dataclass
class SurfaceContext:
    """Everything needed to rebuild H at an arbitrary (X, t)."""

    system: LevelSystem
    probe: FieldProfile
    control: FieldProfile
    geometry: BeamGeometry
    probe_dipole_cm: float = 0.0
    control_dipole_cm: float = 0.0
    counter_rotating: bool = False
    pulse_mixing: bool = False

    def rabi_at(self, x_m: float, t_s: float) -> tuple[float, float]:
        omega_p0 = rabi_frequency(self.probe_dipole_cm, peak_amplitude(self.probe))
        omega_c0 = rabi_frequency(self.control_dipole_cm, peak_amplitude(self.control))
        return (
            float(omega_p0 * envelope(self.probe, x_m, t_s)),
            float(omega_c0 * envelope(self.control, x_m, t_s)),
        )

    def h_at(self, x_m: float, t_s: float) -> HamiltonianMatrix:
        op, oc = self.rabi_at(x_m, t_s)
        return build_extended(
            self.system,
            op,
            oc,
            counter_rotating=self.counter_rotating,
            pulse_mixing=self.pulse_mixing,
        )

    def dh_dx_at(self, x_m: float, t_s: float) -> np.ndarray:
        """Analytic dH/dX from the Gaussian envelope derivative (rad/s per m).

        dOmega/dX follows the amplitude envelope exactly, so the matrix is
        assembled from the per-unit-Rabi coupling patterns instead of a
        numerical difference. This route shares no finite-difference code
        with force().
        """
        op, oc = self.rabi_at(x_m, t_s)
        dop = op * (-2.0 * (x_m - self.probe.center_x_m) / self.probe.waist_m**2)
        doc = oc * (-2.0 * (x_m - self.control.center_x_m) / self.control.waist_m**2)
        _, kp, kc, mp, mc = coupling_channels(self.system, self.pulse_mixing)
        return dop * (kp + mp) + doc * (kc + mc)


@dataclass
class PotentialSurface:
    """Adiabatic energy of one tracked branch on an (X, t) grid.

    Energies are stored in rad/s; multiply by hbar for joules (the CSV
    writer does). state_index names the bare level this branch connects to
    at the first time sample.
    """

    x_grid: np.ndarray
    t_grid: np.ndarray
    energies: np.ndarray             # (nx, nt) rad/s
    vectors: np.ndarray              # (nx, nt, dim) tracked eigenvectors
    state_index: int
    context: SurfaceContext | None = None
    label: str = ""

    def continuity_minimum(self) -> float:
        """Smallest adjacent-sample |overlap| along the time axis."""
        v = self.vectors
        ov = np.abs(np.sum(v[:, 1:].conj() * v[:, :-1], axis=-1))
        return float(ov.min()) if ov.size else 1.0

    def energy_joule(self) -> np.ndarray:
        return HBAR * self.energies

    def nearest_vector(self, x_m: float, t_s: float) -> np.ndarray:
        ix = int(np.clip(np.searchsorted(self.x_grid, x_m), 0, self.x_grid.size - 1))
        it = int(np.clip(np.searchsorted(self.t_grid, t_s), 0, self.t_grid.size - 1))
        return self.vectors[ix, it]


def _line_eigensystems(context: SurfaceContext, x_m: float, t_grid: np.ndarray):
    """Ascending eigen solutions for every sample of one X line, batched.

    Valid when the Hamiltonian is linear in the two pulse amplitudes, which
    rules out the static counter-rotating shifts; the caller falls back to
    per-sample assembly in that case. Damped systems use per-sample eig
    since there is no batched non-Hermitian sort.
    """
    system = context.system
    h0, kp, kc, mp, mc = coupling_channels(system, context.pulse_mixing)
    omega_p0 = rabi_frequency(context.probe_dipole_cm, peak_amplitude(context.probe))
    omega_c0 = rabi_frequency(context.control_dipole_cm, peak_amplitude(context.control))
    ap = omega_p0 * envelope(context.probe, x_m, t_grid)
    ac = omega_c0 * envelope(context.control, x_m, t_grid)
    h = (h0[np.newaxis, :, :]
         + ap[:, np.newaxis, np.newaxis] * (kp + mp)
         + ac[:, np.newaxis, np.newaxis] * (kc + mc))
    if system.gamma_rads == 0:
        vals, vecs = np.linalg.eigh(h)
        return vals.astype(float), vecs.astype(complex)
    nt = t_grid.size
    vals_out = np.empty((nt, system.dim), dtype=complex)
    vecs_out = np.empty((nt, system.dim, system.dim), dtype=complex)
    for k in range(nt):
        vals_k, vecs_k = np.linalg.eig(h[k])
        order = np.argsort(vals_k.real, kind="stable")
        vals_out[k] = vals_k[order]
        vecs_out[k] = vecs_k[:, order] / np.linalg.norm(vecs_k[:, order], axis=0, keepdims=True)
    return vals_out, vecs_out


def _track_line(
    context: SurfaceContext,
    x_m: float,
    t_grid: np.ndarray,
    seed: DressedSolution,
    max_refine_depth: int = 8,
) -> tuple[np.ndarray, np.ndarray]:
    """Track all branches along one X line; returns (values (nt, dim), vectors (nt, dim, dim)).

    The hot loop reorders each sample directly when the assignment is
    unambiguous and no eigenvalues are near-degenerate; anything else goes
    through track_adiabatic, so the delicate cases share one code path.
    """
    dim = context.system.dim
    nt = t_grid.size
    vals_out = np.empty((nt, dim))
    vecs_out = np.empty((nt, dim, dim), dtype=complex)

    if context.counter_rotating:
        line_vals = line_vecs = None
    else:
        line_vals, line_vecs = _line_eigensystems(context, x_m, t_grid)

    prev = seed
    prev_t = None
    idx = np.arange(dim)
    for k in range(nt):
        t = float(t_grid[k])
        if line_vals is None:
            sol = eigensystem(context.h_at(x_m, t), x_m=x_m, t_s=t)
        else:
            vals_k = line_vals[k]
            vecs_k = line_vecs[k]
            scale = max(1.0, float(np.max(np.abs(vals_k))))
            if np.all(np.diff(vals_k.real) > DEGENERACY_REL_TOL * scale):
                p_full = prev.eigenvectors.conj().T @ vecs_k
                p = np.abs(p_full) ** 2
                assign = np.argmax(p, axis=1)
                if np.unique(assign).size == dim:
                    part = np.partition(p, dim - 2, axis=1)
                    margin = part[:, dim - 1] - part[:, dim - 2] if dim > 1 else part[:, 0]
                    if np.min(margin) >= AMBIGUITY_TOL:
                        hit = p[idx, assign]
                        if np.min(hit) < OVERLAP_WARN:
                            warnings.warn(
                                f"adiabatic tracking overlap {np.min(hit):.3f} below "
                                f"{OVERLAP_WARN} at x={x_m:.3e}, t={t:.3e}",
                                RuntimeWarning,
                                stacklevel=2,
                            )
                        phases = p_full[idx, assign]
                        unit = np.where(np.abs(phases) > 0, phases / np.abs(phases), 1.0)
                        tracked = DressedSolution(
                            eigenvalues=vals_k[assign],
                            eigenvectors=vecs_k[:, assign] * unit.conj()[np.newaxis, :],
                            x_m=x_m,
                            t_s=t,
                            branch_ordered=True,
                        )
                        vals_out[k] = tracked.eigenvalues.real
                        vecs_out[k] = tracked.eigenvectors
                        prev = tracked
                        prev_t = t
                        continue
            sol = DressedSolution(eigenvalues=vals_k, eigenvectors=vecs_k, x_m=x_m, t_s=t)
        try:
            tracked = track_adiabatic(prev, sol)
        except StepRefinementNeeded:
            tracked = _refine_track(context, x_m, prev, prev_t, t, sol, max_refine_depth)
        vals_out[k] = tracked.eigenvalues.real
        vecs_out[k] = tracked.eigenvectors
        prev = tracked
        prev_t = t
    return vals_out, vecs_out


def _refine_track(
    context: SurfaceContext,
    x_m: float,
    prev: DressedSolution,
    t_prev: float | None,
    t_curr: float,
    sol_curr: DressedSolution,
    depth: int,
) -> DressedSolution:
    if depth <= 0 or t_prev is None:
        raise StepRefinementNeeded(
            f"tracking stayed ambiguous at X={x_m:.3e}, t={t_curr:.3e} after refinement"
        )
    t_mid = 0.5 * (t_prev + t_curr)
    sol_mid = eigensystem(context.h_at(x_m, t_mid), x_m=x_m, t_s=t_mid)
    try:
        mid_tracked = track_adiabatic(prev, sol_mid)
    except StepRefinementNeeded:
        mid_tracked = _refine_track(context, x_m, prev, t_prev, t_mid, sol_mid, depth - 1)
    try:
        return track_adiabatic(mid_tracked, sol_curr)
    except StepRefinementNeeded:
        return _refine_track(context, x_m, mid_tracked, t_mid, t_curr, sol_curr, depth - 1)


def potential_surface(
    system: LevelSystem,
    probe: FieldProfile,
    control: FieldProfile,
    geometry: BeamGeometry,
    probe_dipole_cm: float,
    control_dipole_cm: float,
    state_index: int,
    x_grid: np.ndarray,
    t_grid: np.ndarray,
    counter_rotating: bool = False,
    pulse_mixing: bool = False,
    label: str = "",
) -> PotentialSurface:
    """Build the tracked adiabatic surface for the branch starting at bare state_index.

    Tracking runs sequentially along t for each X line, seeded with the bare
    basis so branch identities are anchored to field-free levels.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if x_grid.ndim != 1 or t_grid.ndim != 1 or x_grid.size < 2 or t_grid.size < 2:
        raise ConfigError("surface grids must be 1-D with at least two samples")
    if not (np.all(np.diff(x_grid) > 0) and np.all(np.diff(t_grid) > 0)):
        raise ConfigError("surface grids must be strictly increasing")
    if not 0 <= state_index < system.dim:
        raise ConfigError(f"state_index {state_index} outside system dimension {system.dim}")

    context = SurfaceContext(
        system=system,
        probe=probe,
        control=control,
        geometry=geometry,
        counter_rotating=counter_rotating,
        pulse_mixing=pulse_mixing,
        probe_dipole_cm=probe_dipole_cm,
        control_dipole_cm=control_dipole_cm,
    )
    seed = bare_solution(system)
    energies = np.empty((x_grid.size, t_grid.size))
    vectors = np.empty((x_grid.size, t_grid.size, system.dim), dtype=complex)
    for i, x in enumerate(x_grid):
        vals, vecs = _track_line(context, float(x), t_grid, seed)
        energies[i] = vals[:, state_index]
        vectors[i] = vecs[:, :, state_index]
    return PotentialSurface(
        x_grid=x_grid,
        t_grid=t_grid,
        energies=energies,
        vectors=vectors,
        state_index=state_index,
        context=context,
        label=label,
    )


def _branch_energy_at(context: SurfaceContext, x_m: float, t_s: float, v_ref: np.ndarray) -> float:
    sol = eigensystem(context.h_at(x_m, t_s))
    overlaps = np.abs(v_ref.conj() @ sol.eigenvectors) ** 2
    return float(sol.eigenvalues[int(np.argmax(overlaps))].real)


def force(surface: PotentialSurface, x_m: float, t_s: float) -> float:
    """Transverse force -hbar dE/dX (newtons) on the tracked branch.

    Centered finite difference with one Richardson extrapolation step, using
    fresh eigensolves branch-matched to the surface's stored vectors. At the
    X-grid edges the stencil would leave the domain, so a one-sided
    difference is used and a warning emitted.
    """
    ctx = surface.context
    if ctx is None:
        raise ConfigError("surface has no solver context; cannot evaluate force off-grid")
    dx_grid = float(np.min(np.diff(surface.x_grid)))
    h = min(ctx.probe.waist_m / 200.0, dx_grid / 4.0)
    v_ref = surface.nearest_vector(x_m, t_s)
    lo, hi = surface.x_grid[0], surface.x_grid[-1]

    def e_at(x):
        return _branch_energy_at(ctx, x, t_s, v_ref)

    if x_m - h < lo or x_m + h > hi:
        warnings.warn("force stencil at X-grid edge; using one-sided difference", RuntimeWarning, stacklevel=2)
        if x_m - h < lo:
            d = (e_at(x_m + h) - e_at(x_m)) / h
        else:
            d = (e_at(x_m) - e_at(x_m - h)) / h
        return -HBAR * d

    d_h = (e_at(x_m + h) - e_at(x_m - h)) / (2.0 * h)
    d_h2 = (e_at(x_m + 0.5 * h) - e_at(x_m - 0.5 * h)) / h
    return -HBAR * (4.0 * d_h2 - d_h) / 3.0


def hellmann_feynman_force(surface: PotentialSurface, x_m: float, t_s: float) -> float:
    """Independent force route: -hbar <v| dH/dX |v> on the branch-matched eigenvector."""
    ctx = surface.context
    if ctx is None:
        raise ConfigError("surface has no solver context")
    sol = eigensystem(ctx.h_at(x_m, t_s))
    v_ref = surface.nearest_vector(x_m, t_s)
    overlaps = np.abs(v_ref.conj() @ sol.eigenvectors) ** 2
    v = sol.eigenvectors[:, int(np.argmax(overlaps))]
    dh = ctx.dh_dx_at(x_m, t_s)
    return float(-HBAR * np.real(v.conj() @ dh @ v))


def force_grid(surface: PotentialSurface) -> np.ndarray:
    """-hbar dE/dX on the surface grid (newtons), 4th-order stencil inside.

    This is the sampled force field the beamline integrator interpolates;
    force() remains the reference point evaluator.
    """
    e = surface.energies
    x = surface.x_grid
    hx = x[1] - x[0]
    if not np.allclose(np.diff(x), hx, rtol=1e-9):
        grad = np.gradient(e, x, axis=0)
        return -HBAR * grad
    d = np.empty_like(e)
    d[2:-2] = (-e[4:] + 8.0 * e[3:-1] - 8.0 * e[1:-3] + e[:-4]) / (12.0 * hx)
    d[1] = (e[2] - e[0]) / (2.0 * hx)
    d[-2] = (e[-1] - e[-3]) / (2.0 * hx)
    d[0] = (e[1] - e[0]) / hx
    d[-1] = (e[-1] - e[-2]) / hx
    return -HBAR * d
