"""Run operations behind the CLI.

Each operation takes a validated RunConfig and an output directory,
computes its piece of physics, and writes a JSON report, one or more CSV
tables, and an SVG figure. Writers are deterministic: the same resolved
configuration produces byte-identical CSV and JSON, and the SVG carries
no timestamp. Every file embeds the resolved configuration and its hash.
"""

from __future__ import annotations

import copy
import itertools
import json
from pathlib import Path

import numpy as np

from .beamline import (
    OUTCOME_BLOCKED_SLIT2,
    OUTCOME_LABELS,
    force_table_from_offsets,
    build_force_table,
    propagate_ensemble,
    sample_ensemble,
    score_purification,
)
from .config import RunConfig
from .constants import HBAR, K_BOLTZMANN, amu_to_kg, mhz_to_rads, rads_to_mhz
from .dressed import potential_surface
from .errors import ConfigError
from .fields import FieldProfile, peak_amplitude
from .hamiltonian import rabi_frequency
from .molecule import RoLevel, two_photon_offset
from .tdse import (
    PulseSchedule,
    adiabatic_following_report,
    stirap_sequence,
)

# ---------------------------------------------------------------- writers


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_json(path: Path, cfg: RunConfig, payload: dict) -> None:
    body = dict(_jsonable(payload))
    body["config"] = cfg.echo()
    body["config_sha256"] = cfg.sha256()
    path.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_csv(path: Path, cfg: RunConfig, columns: list[str], rows) -> None:
    lines = [
        f"# config_sha256 = {cfg.sha256()}",
        "# config = " + json.dumps(cfg.echo(), sort_keys=True, separators=(",", ":")),
        ",".join(columns),
    ]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _outdir(out_dir: str | Path) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------- shared


def _grids(cfg: RunConfig, probe: FieldProfile, control: FieldProfile):
    b = cfg.values["beamline"]
    xh = b["x_grid_halfwidth_um"] * 1e-6
    th = cfg.t_grid_halfwidth_s(probe, control)
    x_grid = np.linspace(-xh, xh, b["x_grid_points"])
    t_grid = np.linspace(-th, th, b["t_grid_points"])
    return x_grid, t_grid


def _peak_rabi(cfg: RunConfig, probe: FieldProfile, control: FieldProfile):
    spec = cfg.molecule_spec()
    return (
        rabi_frequency(spec.dipole_ge_cm, peak_amplitude(probe)),
        rabi_frequency(spec.dipole_se_cm, peak_amplitude(control)),
    )


def _neighbor_offset_rads(cfg: RunConfig) -> tuple[int, float]:
    """Two-photon offset of the rotational neighbor of the target level."""
    spec = cfg.molecule_spec()
    target = cfg.target_level()
    neighbor_j = target.j + 1 if target.j < spec.j_max else target.j - 1
    offset_mhz = two_photon_offset(
        spec, target, RoLevel("X", 0, neighbor_j),
        cfg.values["beamline"]["partner_delta_j"],
    )
    return neighbor_j, mhz_to_rads(offset_mhz)


# ---------------------------------------------------------------- eigen


def run_eigen(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Dressed potential surfaces on the interaction grid.

    Two tunings: the exact two-photon resonance, where the decoupled zero
    state must appear, and the rotational-neighbor offset, where it must
    not and the ground branch instead forms the trapping well.
    """
    from . import plotting

    out = _outdir(out_dir)
    probe = cfg.field_profile("probe")
    control = cfg.field_profile("control")
    geometry = cfg.beam_geometry()
    spec = cfg.molecule_spec()
    delta_p = cfg.delta_p_rads()
    x_grid, t_grid = _grids(cfg, probe, control)
    neighbor_j, neighbor_offset = _neighbor_offset_rads(cfg)
    omega_p, omega_c = _peak_rabi(cfg, probe, control)
    scale = max(omega_p, omega_c, abs(delta_p))

    cases = [
        ("resonant", 0.0),
        (f"offset_J{neighbor_j}", neighbor_offset),
    ]
    report_cases = []
    csv_rows = []
    panels = []
    for name, delta_two in cases:
        system = cfg.level_system(delta_p, delta_two)
        surface = potential_surface(
            system, probe, control, geometry,
            spec.dipole_ge_cm, spec.dipole_se_cm,
            state_index=0, x_grid=x_grid, t_grid=t_grid, label=name,
        )
        e_index = system.labels.index("e")
        e_amp = float(np.max(np.abs(surface.vectors[..., e_index])))
        # vector purity is only meaningful where the beams are on: in the
        # fringe the branch is quasi-degenerate with its bright partner and
        # the tracked vector may rotate freely inside that subspace
        ix = int(np.argmin(np.abs(x_grid - probe.center_x_m)))
        it = int(np.argmin(np.abs(t_grid - 0.5 * (probe.center_t_s + control.center_t_s))))
        e_amp_peak = float(np.abs(surface.vectors[ix, it, e_index]))
        max_abs = float(np.max(np.abs(surface.energies)))
        depth = max(0.0, -float(surface.energies.min()))
        present = max_abs < 1e-10 * scale and e_amp_peak < 1e-10
        report_cases.append({
            "case": name,
            "delta_two_rads": delta_two,
            "delta_two_mhz": rads_to_mhz(delta_two),
            "dark_state_present": present,
            "max_abs_energy_rads": max_abs,
            "well_depth_rads": depth,
            "well_depth_k": HBAR * depth / K_BOLTZMANN,
            "e_amplitude_at_crossing": e_amp_peak,
            "max_e_amplitude": e_amp,
            "continuity_minimum": float(surface.continuity_minimum()),
        })
        for i, x in enumerate(x_grid):
            for k, t in enumerate(t_grid):
                csv_rows.append((name, x, t, surface.energies[i, k]))
        panels.append((name, x_grid, t_grid, surface.energies))

    report = {
        "operation": "eigen",
        "model": cfg.values["levels"]["model"],
        "scale_rads": scale,
        "cases": report_cases,
    }
    write_json(out / "eigen_report.json", cfg, report)
    write_csv(out / "eigen_surfaces.csv", cfg,
              ["case", "x_m", "t_s", "energy_rads"], csv_rows)
    plotting.surface_heatmaps(out / "eigen_surfaces.svg", panels, cfg.sha256())
    return report


# ---------------------------------------------------------------- follow


def run_follow(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Adiabatic following through the crossing, three tunings.

    The one-photon detuning is rescaled to the demo value with the light
    shift held fixed (omega^2 / delta_p preserved), which keeps the
    dressed-state structure while making the integration affordable.
    """
    from . import plotting

    out = _outdir(out_dir)
    probe = cfg.field_profile("probe")
    control = cfg.field_profile("control")
    spec = cfg.molecule_spec()
    s = cfg.values["schedule"]
    delta_full = cfg.delta_p_rads()
    delta_demo = cfg.delta_p_demo_rads()
    omega_p, omega_c = _peak_rabi(cfg, probe, control)
    ratio = np.sqrt(abs(delta_demo) / abs(delta_full))
    schedule = PulseSchedule.from_crossing(
        probe, control, omega_p * ratio, omega_c * ratio,
        x_m=s["x_demo_um"] * 1e-6,
    )
    t_half = cfg.t_grid_halfwidth_s(probe, control)
    t_span = (-t_half, t_half)
    neighbor_j, neighbor_offset = _neighbor_offset_rads(cfg)

    cases = [
        ("dark_resonant", 0.0, 0.0),
        (f"trap_offset_J{neighbor_j}", neighbor_offset, 0.0),
        ("lossy_resonant", 0.0, cfg.gamma_rads()),
    ]
    report_cases = []
    csv_rows = []
    panels = []
    for name, delta_two, gamma in cases:
        system = cfg.level_system(delta_demo, delta_two, gamma_rads=gamma)
        rep = adiabatic_following_report(
            system, schedule, t_span,
            followed_index=0, n_record=s["n_record"],
            rtol=s["rtol"], atol=s["atol"],
            pulse_mixing=cfg.values["levels"]["pulse_mixing"],
            counter_rotating=cfg.values["levels"]["counter_rotating"],
        )
        totals = rep.branch_populations.sum(axis=1)
        max_total_increase = float(np.max(np.diff(totals), initial=0.0))
        report_cases.append({
            "case": name,
            "delta_two_rads": delta_two,
            "gamma_rads": gamma,
            "min_followed_projection": 1.0 - rep.max_leakage,
            "final_norm": float(rep.norms[-1]),
            "final_total_projection": float(totals[-1]),
            "max_total_projection_increase": max_total_increase,
            "closure_error": rep.closure_error,
        })
        for k, t in enumerate(rep.times):
            csv_rows.append((
                name, t,
                schedule.amplitude_p(t) * schedule.omega_p_peak,
                schedule.amplitude_c(t) * schedule.omega_c_peak,
                *rep.branch_populations[k],
                totals[k],
                rep.norms[k],
            ))
        panels.append((name, rep.times, rep.branch_populations[:, 0], totals, rep.norms))

    dim = cfg.level_system(delta_demo, 0.0).dim
    columns = (["case", "t_s", "omega_p_rads", "omega_c_rads"]
               + [f"branch_{i}" for i in range(dim)] + ["total", "norm"])
    report = {
        "operation": "follow",
        "model": cfg.values["levels"]["model"],
        "delta_p_demo_rads": delta_demo,
        "omega_p_demo_rads": schedule.omega_p_peak,
        "omega_c_demo_rads": schedule.omega_c_peak,
        "light_shift_rads": schedule.omega_p_peak**2 / delta_demo,
        "cases": report_cases,
    }
    write_json(out / "follow_report.json", cfg, report)
    write_csv(out / "follow_timeseries.csv", cfg, columns, csv_rows)
    plotting.follow_panels(out / "follow.svg", panels, cfg.sha256())
    return report


# ---------------------------------------------------------------- stirap


def run_stirap(cfg: RunConfig, out_dir: str | Path) -> dict:
    """One resonant STIRAP window from the bare ground level."""
    from . import plotting

    out = _outdir(out_dir)
    s = cfg.values["schedule"]
    system = cfg.level_system(0.0, 0.0)
    result = stirap_sequence(
        system,
        mhz_to_rads(s["stirap_omega_p_mhz"]),
        mhz_to_rads(s["stirap_omega_c_mhz"]),
        mode=s["stirap_mode"],
        t_end_s=s["stirap_window_us"] * 1e-6,
        n_record=s["n_record"],
        rtol=s["rtol"], atol=s["atol"],
        control_on_s=s["stirap_control_on_us"] * 1e-6,
        ramp_s=s["stirap_ramp_us"] * 1e-6,
        probe_on_s=s["stirap_probe_on_us"] * 1e-6,
        probe_plateau_end_s=s["stirap_probe_plateau_end_us"] * 1e-6,
        control_plateau_end_s=s["stirap_control_plateau_end_us"] * 1e-6,
    )
    labels = list(system.labels)
    final = {f"pop_{lab}": float(p) for lab, p in zip(labels, result.final_populations)}
    report = {
        "operation": "stirap",
        "mode": result.mode,
        "plateau_window_s": list(result.plateau_window_s),
        "plateau_ratio_expected": result.plateau_ratio_expected,
        "plateau_ratio_measured": result.plateau_ratio_measured,
        "final_populations": final,
        "final_norm": float(result.norms[-1]),
    }
    csv_rows = [
        (result.times[k], *result.populations[k], result.norms[k])
        for k in range(result.times.size)
    ]
    write_json(out / "stirap_report.json", cfg, report)
    write_csv(out / "stirap_timeseries.csv", cfg,
              ["t_s"] + [f"pop_{lab}" for lab in labels] + ["norm"], csv_rows)
    plotting.stirap_panel(out / "stirap.svg", result, labels, cfg.sha256())
    return report


# ---------------------------------------------------------------- beamline


def _purification(cfg: RunConfig, record: bool):
    """Sample, build force grids, propagate, and score one beamline run."""
    spec = cfg.molecule_spec()
    probe = cfg.field_profile("probe")
    control = cfg.field_profile("control")
    geometry = cfg.beam_geometry()
    slits = cfg.slit_geometry()
    b = cfg.values["beamline"]
    target = cfg.target_level()
    x_grid, t_grid = _grids(cfg, probe, control)
    levels = np.arange(0, spec.j_max + 1)
    table = build_force_table(
        spec, target, probe, control, geometry, cfg.delta_p_rads(),
        levels, x_grid, t_grid, b["partner_delta_j"],
    )
    ensemble = sample_ensemble(
        spec, slits, b["n_molecules"], cfg.values["run"]["seed"],
        b["v_z_mean_mps"], b["v_z_sigma_mps"],
    )
    record_indices = _select_recorded(ensemble, slits) if record else None
    result = propagate_ensemble(
        ensemble, slits, b["laser_z_m"], table, spec.mass_kg,
        b["v_z_mean_mps"], b["dt_ns"] * 1e-9, record_indices,
    )
    sigma_vt = b["v_z_mean_mps"] * (slits.width_m[0] + slits.width_m[1]) / (
        4.0 * (slits.z_m[1] - slits.z_m[0])
    )
    report = score_purification(
        result, table, target.j, spec.mass_kg, sigma_vt,
        b["v_z_sigma_mps"], b["separation_margin"],
    )
    return report, result, table


def _select_recorded(ensemble, slits, per_level: int = 6) -> np.ndarray:
    """First few molecules per level that clear slit 2 ballistically."""
    z12 = slits.z_m[1] - slits.z_m[0]
    x2 = ensemble.x_m + ensemble.v_t_mps * z12 / ensemble.v_z_mps
    clears = np.abs(x2 - slits.center_m[1]) <= 0.5 * slits.width_m[1]
    picks = []
    for j in np.unique(ensemble.level_j):
        idx = np.nonzero(clears & (ensemble.level_j == j))[0][:per_level]
        picks.extend(int(i) for i in idx)
    return np.asarray(sorted(picks), dtype=np.int64)


def _displacement_stats(result, slits):
    """Slit-3 transverse displacement relative to the ballistic path."""
    ens = result.ensemble
    z3 = slits.z_m[2] - slits.z_m[0]
    ballistic = ens.x_m + ens.v_t_mps * z3 / ens.v_z_mps
    reached = (result.outcome != OUTCOME_BLOCKED_SLIT2)
    disp = result.x_slit3_m - ballistic
    stats = {}
    for j in np.unique(ens.level_j):
        mask = reached & (ens.level_j == j)
        if not np.any(mask):
            stats[int(j)] = {"rms_m": 0.0, "max_abs_m": 0.0, "mean_m": 0.0}
            continue
        d = disp[mask]
        stats[int(j)] = {
            "rms_m": float(np.sqrt(np.mean(d**2))),
            "max_abs_m": float(np.max(np.abs(d))),
            "mean_m": float(np.mean(d)),
        }
    return stats


def _purification_payload(cfg: RunConfig, report, result, table, slits) -> dict:
    disp = _displacement_stats(result, slits)
    per_level = []
    for row, j in enumerate(table.levels):
        surface = table.surfaces.get(int(j))
        per_level.append({
            "level": int(j),
            "label": surface.label if surface is not None else f"level {int(j)}",
            "offset_rads": float(report.offsets_rads[row]),
            "offset_mhz": rads_to_mhz(float(report.offsets_rads[row])),
            "depth_rads": float(report.depths_rads[row]),
            "separation_ratio": float(report.separation_ratios[row]),
            "sampled_weight": float(report.sampled[row]),
            "passed_weight": float(report.passed[row]),
            "blocked_slit2_weight": float(report.blocked_slit2[row]),
            "blocked_slit3_weight": float(report.blocked_slit3[row]),
            "deflected_out_weight": float(report.deflected_out[row]),
            "kick_rms_mps": float(report.kick_rms_mps[row]),
            "kick_max_mps": float(report.kick_max_mps[row]),
            "slit3_displacement": disp.get(int(j), {"rms_m": 0.0, "max_abs_m": 0.0, "mean_m": 0.0}),
        })
    return {
        "target_level": report.target_j,
        "purity": report.purity,
        "purity_defined": report.purity is not None,
        "target_yield": report.target_yield,
        "n_molecules": report.n_molecules,
        "seed": report.seed,
        "doppler_fractional": report.doppler_fractional,
        "outcome_totals": report.outcome_totals(),
        "levels": per_level,
    }


def _trajectory_rows(result, table, slits):
    """Three station rows per molecule (two if it never passed slit 2)."""
    ens = result.ensemble
    z1, z2, z3 = slits.z_m
    labels = {int(j): (table.surfaces[int(j)].label if int(j) in table.surfaces
                       else f"level {int(j)}") for j in table.levels}
    for m in range(ens.size):
        j = int(ens.level_j[m])
        out = OUTCOME_LABELS[result.outcome[m]]
        vz = ens.v_z_mps[m]
        yield (m, labels[j], "slit1", 0.0, ens.x_m[m], ens.v_t_mps[m], out)
        yield (m, labels[j], "slit2", (z2 - z1) / vz, result.x_slit2_m[m],
               ens.v_t_mps[m], out)
        if result.outcome[m] != OUTCOME_BLOCKED_SLIT2:
            yield (m, labels[j], "slit3", (z3 - z1) / vz, result.x_slit3_m[m],
                   ens.v_t_mps[m] + result.kick_mps[m], out)


def _figure_paths(result, table, slits, laser_z_m, v_nominal):
    """Full (z, x) polylines for the recorded molecules, grouped by level."""
    if result.recorded is None or result.recorded.size == 0:
        return []
    ens = result.ensemble
    tau = result.window_tau_s
    za = laser_z_m + v_nominal * tau[0]
    tau_step = tau[1] - tau[0] if tau.size > 1 else 0.0
    z_window = za + v_nominal * tau_step * np.arange(tau.size)
    z_up = np.linspace(slits.z_m[0], za, 40)
    groups: dict[int, list] = {}
    for col, m in enumerate(result.recorded):
        m = int(m)
        vz = ens.v_z_mps[m]
        x_up = ens.x_m[m] + ens.v_t_mps[m] * (z_up - slits.z_m[0]) / vz
        x_win = result.window_x_m[:, col]
        z_dn = np.linspace(z_window[-1], slits.z_m[2], 40)
        v_exit = ens.v_t_mps[m] + result.kick_mps[m]
        x_dn = x_win[-1] + v_exit * (z_dn - z_window[-1]) / vz
        z_all = np.concatenate([z_up, z_window, z_dn])
        x_all = np.concatenate([x_up, x_win, x_dn])
        groups.setdefault(int(ens.level_j[m]), []).append(
            (z_all, x_all, OUTCOME_LABELS[result.outcome[m]])
        )
    labels = {int(j): (table.surfaces[int(j)].label if int(j) in table.surfaces
                       else f"level {int(j)}") for j in table.levels}
    return [(labels[j], groups[j]) for j in sorted(groups)]


def run_beamline(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Full purification run: thermal ensemble through slits and laser."""
    from . import plotting

    out = _outdir(out_dir)
    slits = cfg.slit_geometry()
    b = cfg.values["beamline"]
    report, result, table = _purification(cfg, record=True)
    payload = {"operation": "beamline", **_purification_payload(cfg, report, result, table, slits)}
    write_json(out / "beamline_report.json", cfg, payload)
    write_csv(out / "trajectories.csv", cfg,
              ["molecule_id", "state", "station", "t_s", "x_m", "v_t_mps", "outcome"],
              _trajectory_rows(result, table, slits))
    paths = _figure_paths(result, table, slits, b["laser_z_m"], b["v_z_mean_mps"])
    plotting.beamline_panels(out / "beamline.svg", paths, slits,
                             b["laser_z_m"], b["v_z_mean_mps"], cfg.sha256())
    return payload


# ---------------------------------------------------------------- li6demo


def run_li6demo(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Two synthetic levels split by a small two-photon offset.

    Level 0 sits on resonance and is transmitted; level 1 carries the
    offset and is deflected. A zero split makes the levels identical, so
    the transmitted purity falls back to the input fraction.
    """
    from . import plotting

    out = _outdir(out_dir)
    li = cfg.values["li6demo"]
    b = cfg.values["beamline"]
    spec = cfg.molecule_spec()
    probe = cfg.field_profile("probe")
    control = cfg.field_profile("control")
    geometry = cfg.beam_geometry()
    slits = cfg.slit_geometry()
    mass_kg = amu_to_kg(li["mass_amu"])
    x_grid, t_grid = _grids(cfg, probe, control)
    split_rads = mhz_to_rads(li["split_mhz"])
    table = force_table_from_offsets(
        [0.0, split_rads], [0, 1], probe, control, geometry, cfg.delta_p_rads(),
        spec.dipole_ge_cm, spec.dipole_se_cm, x_grid, t_grid,
        labels=["offset 0 MHz", f"offset {li['split_mhz']:g} MHz"],
    )
    ensemble = sample_ensemble(
        spec, slits, li["n_molecules"], cfg.values["run"]["seed"],
        b["v_z_mean_mps"], b["v_z_sigma_mps"],
        level_weights=np.array([0.5, 0.5]),
    )
    record_indices = _select_recorded(ensemble, slits, per_level=8)
    result = propagate_ensemble(
        ensemble, slits, b["laser_z_m"], table, mass_kg,
        b["v_z_mean_mps"], b["dt_ns"] * 1e-9, record_indices,
    )
    sigma_vt = b["v_z_mean_mps"] * (slits.width_m[0] + slits.width_m[1]) / (
        4.0 * (slits.z_m[1] - slits.z_m[0])
    )
    report = score_purification(
        result, table, 0, mass_kg, sigma_vt,
        b["v_z_sigma_mps"], b["separation_margin"],
    )
    payload = {
        "operation": "li6demo",
        "split_mhz": li["split_mhz"],
        "mass_amu": li["mass_amu"],
        **_purification_payload(cfg, report, result, table, slits),
    }
    write_json(out / "li6demo_report.json", cfg, payload)
    write_csv(out / "li6demo_trajectories.csv", cfg,
              ["molecule_id", "state", "station", "t_s", "x_m", "v_t_mps", "outcome"],
              _trajectory_rows(result, table, slits))
    paths = _figure_paths(result, table, slits, b["laser_z_m"], b["v_z_mean_mps"])
    plotting.beamline_panels(out / "li6demo.svg", paths, slits,
                             b["laser_z_m"], b["v_z_mean_mps"], cfg.sha256())
    return payload


# ---------------------------------------------------------------- sweep


def run_sweep(cfg: RunConfig, out_dir: str | Path) -> dict:
    """Beamline purification over a (power, waist, detuning, T) grid.

    Rows run in listed order through the same chain as the single
    beamline operation, so a one-point sweep reproduces it exactly.
    """
    from . import plotting

    out = _outdir(out_dir)
    sw = cfg.values["sweep"]
    axes = (
        ("power_w", sw["power_w_list"]),
        ("waist_um", sw["waist_um_list"]),
        ("delta_p_percm", sw["delta_p_percm_list"]),
        ("temperature_k", sw["temperature_k_list"]),
    )
    rows = []
    for power, waist, delta_p, temp in itertools.product(*(v for _, v in axes)):
        values = copy.deepcopy(cfg.values)
        values["probe"]["power_w"] = power
        values["control"]["power_w"] = power
        values["probe"]["waist_um"] = waist
        values["control"]["waist_um"] = waist
        values["probe"]["detuning_percm"] = delta_p
        values["molecule"]["temperature_k"] = temp
        point = RunConfig(values=values, source_path=cfg.source_path)
        point.validate()
        report, _, _ = _purification(point, record=False)
        ratios = np.asarray(report.separation_ratios)
        nontarget = ratios[np.asarray(report.levels) != report.target_j]
        rows.append({
            "row": len(rows),
            "power_w": power,
            "waist_um": waist,
            "delta_p_percm": delta_p,
            "temperature_k": temp,
            "purity": report.purity,
            "target_yield": report.target_yield,
            "passed_weight": report.outcome_totals()["passed"],
            "min_nontarget_separation_ratio": float(nontarget.min()) if nontarget.size else 0.0,
            "config_sha256": point.sha256(),
        })

    payload = {
        "operation": "sweep",
        "axes": {name: list(valset) for name, valset in axes},
        "n_rows": len(rows),
        "rows": rows,
    }
    write_json(out / "sweep_report.json", cfg, payload)
    columns = ["row", "power_w", "waist_um", "delta_p_percm", "temperature_k",
               "purity", "target_yield", "passed_weight",
               "min_nontarget_separation_ratio"]
    write_csv(out / "sweep_rows.csv", cfg, columns,
              [tuple("nan" if r[c] is None else r[c] for c in columns) for r in rows])
    plotting.sweep_panel(out / "sweep.svg", rows, cfg.sha256())
    return payload


RUN_OPS = {
    "eigen": run_eigen,
    "follow": run_follow,
    "stirap": run_stirap,
    "beamline": run_beamline,
    "li6demo": run_li6demo,
    "sweep": run_sweep,
}
