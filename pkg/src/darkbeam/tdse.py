"""Time-dependent Schrodinger propagation through pulse sequences.

The integrator is a Runge-Kutta-Fehlberg 4(5) pair that advances the
4th-order solution and uses the embedded 5th-order result for step control.
Advancing the lower-order member keeps the global convergence order exactly
four, which the fixed-step convergence check relies on; library solvers
advance the extrapolated higher-order solution instead.

H(t) = H0 + a_p(t) Kp + a_c(t) Kc, with optional extras:
  - pulse mixing: each beam also drives the other leg, with a residual
    rotating-frame phase exp(+i delta_two t) on the probe-driven s-e element
    and exp(-i delta_two t) on the control-driven g-e element. At
    delta_two = 0 this reduces exactly to the static mixing build.
  - counter-rotating terms: every coupling acquires its anti-resonant
    partner at twice the optical frequency. Only usable with artificially
    scaled optical frequencies; real ones put the step size at 1e-17 s.

Decay enters as -i Gamma/2 on the excited diagonal, so the norm decreases
monotonically at rate Gamma |psi_e|^2; the kernel enforces that bound per
accepted step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigError, NumericError, PropagationError
from .fields import FieldProfile, envelope
from .hamiltonian import LevelSystem, coupling_channels

SHAPE_GAUSSIAN = 0
SHAPE_TRAPEZOID = 1

_STAB_FRACTION = 0.05          # fixed-step dt must stay under this over the fastest rate
_MAX_STEPS = 200_000_000
_LOSS_SLACK = 1e-3             # fractional headroom on the per-step decay bound


@dataclass
class PulseSchedule:
    """Time profiles of the two Rabi couplings seen by one molecule.

    gaussian: each beam is exp(-(t-center)^2 / (2 sigma^2)).
    trapezoid: sin^2 ramp up over `ramp` starting at `on`, flat until
    `plateau_end`, sin^2 ramp down over `ramp`, zero outside.
    Peaks are Rabi frequencies in rad/s; shapes are dimensionless in [0, 1].
    """

    shape: str
    omega_p_peak: float
    omega_c_peak: float
    probe_params: tuple[float, ...]
    control_params: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.shape not in ("gaussian", "trapezoid"):
            raise ConfigError(f"unknown pulse shape {self.shape!r}")
        want = 2 if self.shape == "gaussian" else 3
        for name, params in (("probe", self.probe_params), ("control", self.control_params)):
            if len(params) != want:
                raise ConfigError(f"{name} params need {want} values for shape {self.shape}")
        if self.shape == "gaussian":
            if self.probe_params[1] <= 0 or self.control_params[1] <= 0:
                raise ConfigError("gaussian pulse sigma must be positive")
        else:
            for params in (self.probe_params, self.control_params):
                on, ramp, plateau_end = params
                if ramp <= 0:
                    raise ConfigError("trapezoid ramp must be positive")
                if plateau_end < on + ramp:
                    raise ConfigError("trapezoid plateau ends before the ramp completes")

    @property
    def shape_code(self) -> int:
        return SHAPE_GAUSSIAN if self.shape == "gaussian" else SHAPE_TRAPEZOID

    def _amp(self, params: tuple[float, ...], t):
        t = np.asarray(t, dtype=float)
        if self.shape == "gaussian":
            center, sigma = params
            out = np.exp(-((t - center) ** 2) / (2.0 * sigma**2))
        else:
            on, ramp, plateau_end = params
            out = np.zeros_like(t)
            rising = (t >= on) & (t < on + ramp)
            out[rising] = np.sin(0.5 * np.pi * (t[rising] - on) / ramp) ** 2
            out[(t >= on + ramp) & (t <= plateau_end)] = 1.0
            falling = (t > plateau_end) & (t < plateau_end + ramp)
            out[falling] = np.cos(0.5 * np.pi * (t[falling] - plateau_end) / ramp) ** 2
        return out if out.ndim else float(out)

    def amplitude_p(self, t):
        """Probe Rabi frequency at time t (rad/s)."""
        return self.omega_p_peak * self._amp(self.probe_params, t)

    def amplitude_c(self, t):
        """Control Rabi frequency at time t (rad/s)."""
        return self.omega_c_peak * self._amp(self.control_params, t)

    @classmethod
    def from_crossing(
        cls,
        probe: FieldProfile,
        control: FieldProfile,
        omega_p_peak: float,
        omega_c_peak: float,
        x_m: float,
    ) -> "PulseSchedule":
        """Gaussian pair seen at fixed transverse position x_m.

        The spatial envelope factor at x_m folds into the peak value; the
        temporal factor becomes the schedule.
        """
        sp = np.exp(-((x_m - probe.center_x_m) ** 2) / probe.waist_m**2)
        sc = np.exp(-((x_m - control.center_x_m) ** 2) / control.waist_m**2)
        return cls(
            shape="gaussian",
            omega_p_peak=omega_p_peak * sp,
            omega_c_peak=omega_c_peak * sc,
            probe_params=(probe.center_t_s, probe.sigma_t_s),
            control_params=(control.center_t_s, control.sigma_t_s),
        )


@dataclass
class WavefunctionState:
    t_s: float
    psi: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.psi) ** 2


@dataclass
class PropagationResult:
    final: WavefunctionState
    times: np.ndarray
    psis: np.ndarray               # (n_record, dim)
    accepted_steps: int
    rejected_steps: int
    min_step_s: float
    schedule: PulseSchedule
    system: LevelSystem = field(repr=False, default=None)

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.psis, axis=1)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.psis) ** 2


@njit(cache=True)
def _amp_nb(shape_code, p0, p1, p2, t):
    if shape_code == 0:
        return np.exp(-((t - p0) ** 2) / (2.0 * p1 * p1))
    if t < p0 or t >= p2 + p1:
        return 0.0
    if t < p0 + p1:
        s = np.sin(0.5 * np.pi * (t - p0) / p1)
        return s * s
    if t <= p2:
        return 1.0
    c = np.cos(0.5 * np.pi * (t - p2) / p1)
    return c * c


@njit(cache=True)
def _fill_h(h, h0, kp, kc, mpu, mcu, kpu, kcu, ap, ac, t,
            delta_two, use_mixing, use_cr, omega_p, omega_c):
    n = h.shape[0]
    for i in range(n):
        for j in range(n):
            h[i, j] = h0[i, j] + ap * kp[i, j] + ac * kc[i, j]
    if use_mixing:
        ph = np.exp(1j * delta_two * t)
        for i in range(n):
            for j in range(i + 1, n):
                if mpu[i, j] != 0.0:
                    term = ap * ph * mpu[i, j]
                    h[i, j] += term
                    h[j, i] += np.conj(term)
                if mcu[i, j] != 0.0:
                    term = ac * np.conj(ph) * mcu[i, j]
                    h[i, j] += term
                    h[j, i] += np.conj(term)
    if use_cr:
        php = np.exp(2j * omega_p * t)
        phc = np.exp(2j * omega_c * t)
        for i in range(n):
            for j in range(i + 1, n):
                if kpu[i, j] != 0.0:
                    term = ap * php * kpu[i, j]
                    h[i, j] += term
                    h[j, i] += np.conj(term)
                if kcu[i, j] != 0.0:
                    term = ac * phc * kcu[i, j]
                    h[i, j] += term
                    h[j, i] += np.conj(term)


@njit(cache=True)
def _deriv(out, h, y):
    n = y.shape[0]
    for i in range(n):
        s = 0.0 + 0.0j
        for j in range(n):
            s += h[i, j] * y[j]
        out[i] = -1j * s


@njit(cache=True)
def _rkf45(h0, kp, kc, mpu, mcu, kpu, kcu,
           shape_code, pp0, pp1, pp2, pc0, pc1, pc2, op_peak, oc_peak,
           delta_two, use_mixing, use_cr, omega_p, omega_c, gamma, e_index,
           t0, t1, psi0, fixed_dt, rtol, atol, h_max, record_ts):
    n = psi0.shape[0]
    n_rec = record_ts.shape[0]
    rec = np.zeros((n_rec, n), np.complex128)
    h_work = np.empty((n, n), np.complex128)
    k = np.empty((6, n), np.complex128)
    ys = np.empty(n, np.complex128)
    y4 = np.empty(n, np.complex128)
    y5 = np.empty(n, np.complex128)
    y = psi0.copy()

    # Fehlberg tableau
    c2, c3, c4, c5, c6 = 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5
    a21 = 0.25
    a31, a32 = 3.0 / 32.0, 9.0 / 32.0
    a41, a42, a43 = 1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0
    a51, a52, a53, a54 = 439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0
    a61, a62, a63, a64, a65 = -8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0
    b41, b43, b44, b45 = 25.0 / 216.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2
    b51, b53, b54, b55, b56 = 16.0 / 135.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0

    t = t0
    rec_i = 0
    tiny = 1e-16 * max(abs(t0), abs(t1), 1e-30)
    while rec_i < n_rec and record_ts[rec_i] <= t0 + tiny:
        for i in range(n):
            rec[rec_i, i] = y[i]
        rec_i += 1

    if fixed_dt > 0.0:
        h = fixed_dt
    else:
        h = min(h_max, (t1 - t0) * 1e-3)
    n_acc = 0
    n_rej = 0
    min_h = 1e300
    flag = 0

    while t < t1 - tiny:
        target = t1
        if rec_i < n_rec and record_ts[rec_i] < target:
            target = record_ts[rec_i]
        hs = h
        clamped = False
        if t + hs >= target - tiny:
            hs = target - t
            clamped = True
        if hs <= 0.0:
            if rec_i < n_rec and target == record_ts[rec_i]:
                for i in range(n):
                    rec[rec_i, i] = y[i]
                rec_i += 1
                continue
            break

        _fill_h(h_work, h0, kp, kc, mpu, mcu, kpu, kcu,
                op_peak * _amp_nb(shape_code, pp0, pp1, pp2, t),
                oc_peak * _amp_nb(shape_code, pc0, pc1, pc2, t),
                t, delta_two, use_mixing, use_cr, omega_p, omega_c)
        _deriv(k[0], h_work, y)

        for i in range(n):
            ys[i] = y[i] + hs * a21 * k[0, i]
        t2 = t + c2 * hs
        _fill_h(h_work, h0, kp, kc, mpu, mcu, kpu, kcu,
                op_peak * _amp_nb(shape_code, pp0, pp1, pp2, t2),
                oc_peak * _amp_nb(shape_code, pc0, pc1, pc2, t2),
                t2, delta_two, use_mixing, use_cr, omega_p, omega_c)
        _deriv(k[1], h_work, ys)

        for i in range(n):
            ys[i] = y[i] + hs * (a31 * k[0, i] + a32 * k[1, i])
        t3 = t + c3 * hs
        _fill_h(h_work, h0, kp, kc, mpu, mcu, kpu, kcu,
                op_peak * _amp_nb(shape_code, pp0, pp1, pp2, t3),
                oc_peak * _amp_nb(shape_code, pc0, pc1, pc2, t3),
                t3, delta_two, use_mixing, use_cr, omega_p, omega_c)
        _deriv(k[2], h_work, ys)

        for i in range(n):
            ys[i] = y[i] + hs * (a41 * k[0, i] + a42 * k[1, i] + a43 * k[2, i])
        t4 = t + c4 * hs
        _fill_h(h_work, h0, kp, kc, mpu, mcu, kpu, kcu,
                op_peak * _amp_nb(shape_code, pp0, pp1, pp2, t4),
                oc_peak * _amp_nb(shape_code, pc0, pc1, pc2, t4),
                t4, delta_two, use_mixing, use_cr, omega_p, omega_c)
        _deriv(k[3], h_work, ys)

        for i in range(n):
            ys[i] = y[i] + hs * (a51 * k[0, i] + a52 * k[1, i] + a53 * k[2, i] + a54 * k[3, i])
        t5 = t + c5 * hs
        _fill_h(h_work, h0, kp, kc, mpu, mcu, kpu, kcu,
                op_peak * _amp_nb(shape_code, pp0, pp1, pp2, t5),
                oc_peak * _amp_nb(shape_code, pc0, pc1, pc2, t5),
                t5, delta_two, use_mixing, use_cr, omega_p, omega_c)
        _deriv(k[4], h_work, ys)

        for i in range(n):
            ys[i] = y[i] + hs * (a61 * k[0, i] + a62 * k[1, i] + a63 * k[2, i]
                                 + a64 * k[3, i] + a65 * k[4, i])
        t6 = t + c6 * hs
        _fill_h(h_work, h0, kp, kc, mpu, mcu, kpu, kcu,
                op_peak * _amp_nb(shape_code, pp0, pp1, pp2, t6),
                oc_peak * _amp_nb(shape_code, pc0, pc1, pc2, t6),
                t6, delta_two, use_mixing, use_cr, omega_p, omega_c)
        _deriv(k[5], h_work, ys)

        err = 0.0
        for i in range(n):
            y4[i] = y[i] + hs * (b41 * k[0, i] + b43 * k[2, i] + b44 * k[3, i] + b45 * k[4, i])
            y5[i] = y[i] + hs * (b51 * k[0, i] + b53 * k[2, i] + b54 * k[3, i]
                                 + b55 * k[4, i] + b56 * k[5, i])
            sc = atol + rtol * max(abs(y[i]), abs(y4[i]))
            d = abs(y5[i] - y4[i]) / sc
            err += d * d
        err = np.sqrt(err / n)

        accept = True if fixed_dt > 0.0 else err <= 1.0
        if accept:
            if gamma > 0.0:
                n_old = 0.0
                n_new = 0.0
                for i in range(n):
                    n_old += abs(y[i]) ** 2
                    n_new += abs(y4[i]) ** 2
                slack = 100.0 * (atol + rtol * np.sqrt(n_old))
                if n_new > n_old + slack:
                    flag = 2
                    break
                pe = max(abs(y[e_index]) ** 2, abs(y4[e_index]) ** 2)
                if (n_old - n_new) > gamma * hs * pe * (1.0 + _LOSS_SLACK) + slack:
                    flag = 3
                    break
            for i in range(n):
                y[i] = y4[i]
            t = t + hs
            n_acc += 1
            if hs < min_h:
                min_h = hs
            while rec_i < n_rec and record_ts[rec_i] <= t + tiny:
                for i in range(n):
                    rec[rec_i, i] = y[i]
                rec_i += 1
        else:
            n_rej += 1

        if fixed_dt <= 0.0:
            if err > 0.0:
                fac = 0.9 * err ** (-0.2)
            else:
                fac = 5.0
            if fac > 5.0:
                fac = 5.0
            if fac < 0.2:
                fac = 0.2
            if accept and clamped:
                pass  # keep h: the clamp, not the error, set this step's size
            else:
                h = hs * fac
            if h > h_max:
                h = h_max
            if h < (t1 - t0) * 1e-15:
                flag = 1
                break
        if n_acc + n_rej > _MAX_STEPS:
            flag = 4
            break

    return y, t, n_acc, n_rej, min_h, flag, rec, rec_i


def stability_dt_limit(system: LevelSystem, schedule: PulseSchedule,
                       counter_rotating: bool = False) -> float:
    """Largest admissible fixed step: _STAB_FRACTION over the fastest rate in H."""
    rates = [float(np.max(np.abs(system.detunings))),
             abs(schedule.omega_p_peak), abs(schedule.omega_c_peak),
             system.gamma_rads]
    if counter_rotating:
        rates += [2.0 * system.optical_omega_p_rads, 2.0 * system.optical_omega_c_rads]
    fastest = max(rates)
    if fastest <= 0:
        raise ConfigError("system has no nonzero rates; step limit undefined")
    return _STAB_FRACTION / fastest


def propagate(
    system: LevelSystem,
    schedule: PulseSchedule,
    psi0: np.ndarray,
    t_span: tuple[float, float],
    record_ts: np.ndarray | None = None,
    fixed_dt: float | None = None,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    counter_rotating: bool = False,
    pulse_mixing: bool = False,
) -> PropagationResult:
    """Integrate i dpsi/dt = H(t) psi across t_span.

    Adaptive by default; pass fixed_dt for uniform steps (it must satisfy
    stability_dt_limit, otherwise ConfigError). record_ts, if given, must be
    sorted and inside t_span; the state is stored at each of those times.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ConfigError("t_span must be increasing")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (system.dim,):
        raise ConfigError(f"psi0 shape {psi0.shape} does not match system dimension {system.dim}")
    nrm = np.linalg.norm(psi0)
    if not np.isfinite(nrm) or nrm == 0:
        raise ConfigError("psi0 must be normalizable")

    if record_ts is None:
        record_ts = np.empty(0)
    record_ts = np.ascontiguousarray(record_ts, dtype=float)
    if record_ts.size:
        if np.any(np.diff(record_ts) <= 0):
            raise ConfigError("record times must be strictly increasing")
        if record_ts[0] < t0 or record_ts[-1] > t1:
            raise ConfigError("record times must lie inside t_span")

    if counter_rotating and (system.optical_omega_p_rads <= 0 or system.optical_omega_c_rads <= 0):
        raise ConfigError("counter-rotating terms need optical frequencies on the system")

    h0, kp, kc, mp, mc = coupling_channels(system, pulse_mixing)
    use_mixing = pulse_mixing and (np.any(mp) or np.any(mc))

    limit = stability_dt_limit(system, schedule, counter_rotating)
    if fixed_dt is not None:
        if fixed_dt <= 0:
            raise ConfigError("fixed_dt must be positive")
        if fixed_dt > limit:
            raise ConfigError(
                f"fixed_dt {fixed_dt:.3e} s exceeds the stability limit {limit:.3e} s"
            )
        fdt = float(fixed_dt)
    else:
        fdt = -1.0

    pp = tuple(schedule.probe_params) + (0.0,) * (3 - len(schedule.probe_params))
    pc = tuple(schedule.control_params) + (0.0,) * (3 - len(schedule.control_params))

    y, t_end, n_acc, n_rej, min_h, flag, rec, rec_n = _rkf45(
        np.ascontiguousarray(h0, dtype=complex),
        np.ascontiguousarray(kp, dtype=float),
        np.ascontiguousarray(kc, dtype=float),
        np.ascontiguousarray(np.triu(mp, 1), dtype=float),
        np.ascontiguousarray(np.triu(mc, 1), dtype=float),
        np.ascontiguousarray(np.triu(kp, 1), dtype=float),
        np.ascontiguousarray(np.triu(kc, 1), dtype=float),
        schedule.shape_code, pp[0], pp[1], pp[2], pc[0], pc[1], pc[2],
        float(schedule.omega_p_peak), float(schedule.omega_c_peak),
        float(system.delta_two), bool(use_mixing), bool(counter_rotating),
        float(system.optical_omega_p_rads), float(system.optical_omega_c_rads),
        float(system.gamma_rads), 1,
        t0, t1, np.ascontiguousarray(psi0), fdt, float(rtol), float(atol),
        min(20.0 * limit, (t1 - t0) / 10.0), record_ts,
    )

    if flag == 1:
        raise PropagationError(
            f"step size underflow at t={t_end:.6e} s after {n_acc} accepted steps"
        )
    if flag == 2:
        raise NumericError(f"norm increased during damped propagation at t={t_end:.6e} s")
    if flag == 3:
        raise NumericError(
            f"norm loss exceeded the Gamma |psi_e|^2 bound at t={t_end:.6e} s"
        )
    if flag == 4:
        raise PropagationError(f"step budget exhausted ({_MAX_STEPS} steps)")
    if rec_n != record_ts.size:
        raise NumericError(
            f"recorded {rec_n} of {record_ts.size} requested samples; integration stopped early"
        )

    steps = max(n_acc, 1)
    norm_end = float(np.linalg.norm(y))
    if system.gamma_rads == 0:
        if fixed_dt is None:
            tol = 1e-8 * max(1.0, steps / 1e5)
        else:
            tol = 1e-3
        if abs(norm_end - 1.0) > tol and abs(np.linalg.norm(psi0) - 1.0) < 1e-12:
            raise NumericError(
                f"norm drifted to {norm_end:.12f} over {steps} steps (tolerance {tol:.2e})"
            )
    else:
        if norm_end > np.linalg.norm(psi0) + 1e-6:
            raise NumericError(f"final norm {norm_end:.9f} above initial with decay on")

    return PropagationResult(
        final=WavefunctionState(t_s=t_end, psi=y),
        times=record_ts.copy(),
        psis=rec,
        accepted_steps=n_acc,
        rejected_steps=n_rej,
        min_step_s=float(min_h) if n_acc else 0.0,
        schedule=schedule,
        system=system,
    )


def dressed_projection(psi: np.ndarray, solution) -> np.ndarray:
    """Populations of psi in the dressed basis of `solution` (branch order)."""
    return np.abs(solution.eigenvectors.conj().T @ np.asarray(psi, dtype=complex)) ** 2


STIRAP_MODES = ("hold_superposition", "complete_transfer_back")


def stirap_schedule(
    omega_p_peak: float,
    omega_c_peak: float,
    mode: str = "complete_transfer_back",
    control_on_s: float = 0.5e-6,
    ramp_s: float = 0.5e-6,
    probe_on_s: float = 1.0e-6,
    probe_plateau_end_s: float = 2.5e-6,
    control_plateau_end_s: float = 3.0e-6,
    t_end_s: float = 4.0e-6,
) -> PulseSchedule:
    """Trapezoid pair with the control leading on both edges.

    complete_transfer_back ramps the probe down first, steering the dark
    state back onto the bare ground level. hold_superposition never ramps
    down inside the window, freezing the mixing angle at the plateau value.
    """
    if mode not in STIRAP_MODES:
        raise ConfigError(f"mode must be one of {STIRAP_MODES}, got {mode!r}")
    if not control_on_s < probe_on_s:
        raise ConfigError("control must switch on before the probe")
    if mode == "complete_transfer_back":
        if not probe_plateau_end_s + ramp_s <= control_plateau_end_s:
            raise ConfigError("probe must be fully off before the control ramps down")
        if control_plateau_end_s + ramp_s > t_end_s:
            raise ConfigError("control ramp-down must finish inside the window")
        p_end, c_end = probe_plateau_end_s, control_plateau_end_s
    else:
        p_end = c_end = t_end_s + ramp_s  # ramps pushed past the window
    return PulseSchedule(
        shape="trapezoid",
        omega_p_peak=omega_p_peak,
        omega_c_peak=omega_c_peak,
        probe_params=(probe_on_s, ramp_s, p_end),
        control_params=(control_on_s, ramp_s, c_end),
    )


@dataclass
class StirapResult:
    mode: str
    times: np.ndarray
    populations: np.ndarray        # (n_record, dim) bare-basis
    norms: np.ndarray
    plateau_window_s: tuple[float, float]
    plateau_ratio_expected: float
    plateau_ratio_measured: float
    final_populations: np.ndarray
    propagation: PropagationResult


def stirap_sequence(
    system: LevelSystem,
    omega_p_peak: float,
    omega_c_peak: float,
    mode: str = "complete_transfer_back",
    t_end_s: float = 4.0e-6,
    n_record: int = 401,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    **schedule_kwargs,
) -> StirapResult:
    """Run one STIRAP window from the bare ground level.

    The plateau ratio |psi_g|^2 / |psi_s|^2 is measured where both beams sit
    at full amplitude; on the dark state it equals (omega_c / omega_p)^2.
    """
    sched = stirap_schedule(omega_p_peak, omega_c_peak, mode=mode, t_end_s=t_end_s,
                            **schedule_kwargs)
    psi0 = np.zeros(system.dim, dtype=complex)
    psi0[0] = 1.0
    ts = np.linspace(0.0, t_end_s, n_record)
    result = propagate(system, sched, psi0, (0.0, t_end_s), record_ts=ts,
                       rtol=rtol, atol=atol)
    pops = result.populations
    probe_on, ramp, probe_end = sched.probe_params
    lo = probe_on + ramp
    hi = min(probe_end, t_end_s)
    window = (ts >= lo) & (ts <= hi)
    if not np.any(window):
        raise ConfigError("no record samples fall inside the common plateau")
    ratio = float(np.mean(pops[window, 0] / pops[window, 2]))
    return StirapResult(
        mode=mode,
        times=ts,
        populations=pops,
        norms=result.norms,
        plateau_window_s=(lo, hi),
        plateau_ratio_expected=(omega_c_peak / omega_p_peak) ** 2,
        plateau_ratio_measured=ratio,
        final_populations=result.final.populations,
        propagation=result,
    )


@dataclass
class FollowReport:
    """Dressed-basis view of one propagation, tracked along the record grid.

    branch_populations are projections onto the eigenbasis of the undamped
    Hamiltonian at each sample, branch-ordered from the bare levels. With
    decay on, their sum equals the squared norm (completeness), so
    leakage is reported conditioned on survival.
    """

    times: np.ndarray
    branch_populations: np.ndarray   # (n_record, dim)
    norms: np.ndarray
    followed_index: int
    max_leakage: float
    closure_error: float
    propagation: PropagationResult


def adiabatic_following_report(
    system: LevelSystem,
    schedule: PulseSchedule,
    t_span: tuple[float, float],
    followed_index: int = 0,
    n_record: int = 201,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    pulse_mixing: bool = False,
    counter_rotating: bool = False,
) -> FollowReport:
    """Propagate from one bare level and score how well it rides its branch.

    The projection basis is always the ideal undamped Lambda eigensystem;
    mixing and counter-rotating options affect only the propagation, so the
    report shows what those imperfections do to branch purity.
    """
    import dataclasses

    from .dressed import bare_solution, eigensystem, track_adiabatic
    from .hamiltonian import HamiltonianMatrix

    if not 0 <= followed_index < system.dim:
        raise ConfigError(f"followed_index {followed_index} outside dimension {system.dim}")
    psi0 = np.zeros(system.dim, dtype=complex)
    psi0[followed_index] = 1.0
    ts = np.linspace(t_span[0], t_span[1], n_record)
    result = propagate(system, schedule, psi0, t_span, record_ts=ts, rtol=rtol,
                       atol=atol, pulse_mixing=pulse_mixing,
                       counter_rotating=counter_rotating)

    ideal = dataclasses.replace(system, gamma_rads=0.0)
    h0, kp, kc, _, _ = coupling_channels(ideal, False)
    prev = bare_solution(ideal)
    pops = np.empty((n_record, system.dim))
    closure = 0.0
    for k, t in enumerate(ts):
        ap = float(schedule.amplitude_p(t))
        ac = float(schedule.amplitude_c(t))
        sol = eigensystem(HamiltonianMatrix(matrix=h0 + ap * kp + ac * kc))
        tracked = track_adiabatic(prev, sol)
        pops[k] = dressed_projection(result.psis[k], tracked)
        closure = max(closure, abs(pops[k].sum() - np.linalg.norm(result.psis[k]) ** 2))
        prev = tracked

    norms = result.norms
    with np.errstate(invalid="ignore", divide="ignore"):
        conditional = np.where(norms > 1e-30, pops[:, followed_index] / norms**2, 1.0)
    return FollowReport(
        times=ts,
        branch_populations=pops,
        norms=norms,
        followed_index=followed_index,
        max_leakage=float(np.max(1.0 - conditional)),
        closure_error=float(closure),
        propagation=result,
    )
