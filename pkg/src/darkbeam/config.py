"""INI-style run configuration: schema, defaults, validation, provenance.

Every physical input has a default, so an empty config is runnable. Keys
carry explicit unit suffixes. Unknown sections or keys are errors, and
messages are anchored to the offending line of the file where possible.

The resolved configuration (defaults merged with file and CLI overrides)
is echoed into every output file together with its sha256 hash, so any
artifact can be traced back to the exact inputs that produced it.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Any

from .constants import amu_to_kg, mhz_to_rads, percm_to_rads
from .errors import ConfigError
from .fields import BeamGeometry, FieldProfile, sigma_t_from_geometry
from .hamiltonian import LevelSystem, extended_system
from .molecule import MoleculeSpec, RoLevel

RUN_MODES = ("eigen", "follow", "stirap", "beamline", "sweep", "li6demo")
MODEL_SIZES = (3, 7, 9, 11)

# (type, default) per key; types: float, int, str, bool, floatlist
SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "molecule": {
        "name": ("str", "LiRb"),
        "mass_amu": ("float", 91.9278),
        "b_e_percm": ("float", 0.2158),
        "alpha_e_percm": ("float", 0.0015),
        "b_excited_percm": ("float", 0.2158),
        "alpha_excited_percm": ("float", 0.0),
        "vibrational_spacing_percm": ("float", 195.0),
        "excited_origin_percm": ("float", 17065.0),
        "dipole_ge_debye": ("float", 4.0),
        "dipole_se_debye": ("float", 4.0),
        "temperature_k": ("float", 5.0),
        "j_max": ("int", 7),
    },
    "probe": {
        "power_w": ("float", 0.8),
        "waist_um": ("float", 10.0),
        "wavelength_nm": ("float", 586.0),
        "center_x_um": ("float", 10.0),
        "center_t_us": ("float", 0.6),
        "sigma_t_us": ("float", 0.0),      # 0 = derive from crossing geometry
        "detuning_percm": ("float", 300.0),
    },
    "control": {
        "power_w": ("float", 0.8),
        "waist_um": ("float", 10.0),
        "wavelength_nm": ("float", 592.8),
        "center_x_um": ("float", 10.0),
        "center_t_us": ("float", -0.6),
        "sigma_t_us": ("float", 0.0),
    },
    "geometry": {
        "crossing_angle_deg": ("float", 1.0),
        "longitudinal_velocity_mps": ("float", 500.0),
        "focal_length_cm": ("float", 10.0),
        "aperture_diameter_mm": ("float", 6.3),
    },
    "levels": {
        "model": ("int", 3),
        "gamma_mhz": ("float", 10.0),      # assumed linewidth, TDSE demos only
        "coupling_scale": ("float", 1.0),
        "mixing_ratio": ("float", 1.0),
        "extra_ratio": ("float", 0.5),
        "rotational_offset_percm": ("float", 1.27),
        "anharmonic_offset_percm": ("float", 4.99),
        "counter_rotating": ("bool", False),
        "pulse_mixing": ("bool", False),
    },
    "schedule": {
        "delta_p_demo_ghz": ("float", 1.0),
        "x_demo_um": ("float", 10.0),
        "n_record": ("int", 401),
        "rtol": ("float", 1e-9),
        "atol": ("float", 1e-12),
        "stirap_mode": ("str", "complete_transfer_back"),
        "stirap_omega_p_mhz": ("float", 5.0),
        "stirap_omega_c_mhz": ("float", 10.0),
        "stirap_control_on_us": ("float", 0.5),
        "stirap_ramp_us": ("float", 0.5),
        "stirap_probe_on_us": ("float", 1.0),
        "stirap_probe_plateau_end_us": ("float", 2.5),
        "stirap_control_plateau_end_us": ("float", 3.0),
        "stirap_window_us": ("float", 4.0),
    },
    "beamline": {
        "target_j": ("int", 0),
        "partner_delta_j": ("int", 0),
        "slit_z_m": ("floatlist", [0.0, 1.0, 2.52]),
        "slit_width_um": ("floatlist", [4.0, 4.0, 4.0]),
        "slit_center_um": ("floatlist", [0.0, 0.0, 0.0]),
        "laser_z_m": ("float", 1.02),
        "n_molecules": ("int", 10000),
        "v_z_mean_mps": ("float", 500.0),
        "v_z_sigma_mps": ("float", 50.0),
        "dt_ns": ("float", 4.0),
        "x_grid_halfwidth_um": ("float", 40.0),
        "x_grid_points": ("int", 201),
        "t_grid_points": ("int", 181),
        "t_grid_halfwidth_us": ("float", 0.0),  # 0 = 4.5 sigma + |center|
        "separation_margin": ("float", 5.0),
    },
    "sweep": {
        "power_w_list": ("floatlist", [0.8]),
        "waist_um_list": ("floatlist", [10.0]),
        "delta_p_percm_list": ("floatlist", [300.0]),
        "temperature_k_list": ("floatlist", [5.0]),
    },
    "li6demo": {
        "split_mhz": ("float", 75.0),
        "mass_amu": ("float", 6.0151228),
        "n_molecules": ("int", 4000),
    },
    "run": {
        "mode": ("str", "beamline"),
        "seed": ("int", 12345),
        "output_dir": ("str", "runs"),
    },
}

_BOOL_WORDS = {
    "true": True, "yes": True, "on": True, "1": True,
    "false": False, "no": False, "off": False, "0": False,
}


def _line_of(text: str | None, section: str, key: str | None = None) -> str:
    """Best-effort 'line N' anchor for error messages."""
    if text is None:
        return ""
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+?)\]", stripped)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return f" (line {lineno})"
            continue
        if key is not None and current == section:
            if re.match(rf"{re.escape(key)}\s*[=:]", stripped):
                return f" (line {lineno})"
    return ""


def _convert(kind: str, raw: str, where: str) -> Any:
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            if raw.lower() not in _BOOL_WORDS:
                raise ValueError(raw)
            return _BOOL_WORDS[raw.lower()]
        if kind == "floatlist":
            parts = [p for p in raw.split(",") if p.strip()]
            if not parts:
                raise ValueError("empty list")
            return [float(p) for p in parts]
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind}") from None


def _canonical(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


@dataclass
class RunConfig:
    """Fully resolved configuration plus builders for the domain objects."""

    values: dict[str, dict[str, Any]]
    source_path: str | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def get(self, section: str, key: str) -> Any:
        return self.values[section][key]

    # ---- provenance -------------------------------------------------

    def echo(self) -> dict[str, dict[str, str]]:
        """Resolved values as canonical strings, schema order.

        The output directory is provenance-neutral: writing the same run
        into two different places must not change a single output byte.
        """
        return {
            section: {
                key: _canonical(self.values[section][key])
                for key in keys
                if (section, key) != ("run", "output_dir")
            }
            for section, keys in SCHEMA.items()
        }

    def sha256(self) -> str:
        text = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    # ---- domain builders --------------------------------------------

    def molecule_spec(self) -> MoleculeSpec:
        m = self.values["molecule"]
        return MoleculeSpec(
            name=m["name"],
            mass_kg=amu_to_kg(m["mass_amu"]),
            b_e_percm=m["b_e_percm"],
            alpha_e_percm=m["alpha_e_percm"],
            b_excited_percm=m["b_excited_percm"],
            alpha_excited_percm=m["alpha_excited_percm"],
            vibrational_spacing_percm=m["vibrational_spacing_percm"],
            excited_origin_percm=m["excited_origin_percm"],
            dipole_ge_debye=m["dipole_ge_debye"],
            dipole_se_debye=m["dipole_se_debye"],
            temperature_k=m["temperature_k"],
            j_max=m["j_max"],
        )

    def beam_geometry(self) -> BeamGeometry:
        g = self.values["geometry"]
        return BeamGeometry(
            crossing_angle_rad=math.radians(g["crossing_angle_deg"]),
            longitudinal_velocity_mps=g["longitudinal_velocity_mps"],
            focal_length_m=g["focal_length_cm"] * 1e-2,
            aperture_diameter_m=g["aperture_diameter_mm"] * 1e-3,
        )

    def field_profile(self, role: str) -> FieldProfile:
        f = self.values[role]
        sigma = f["sigma_t_us"] * 1e-6
        if sigma <= 0:
            sigma = sigma_t_from_geometry(f["waist_um"] * 1e-6, self.beam_geometry())
        return FieldProfile(
            role=role,
            power_w=f["power_w"],
            waist_m=f["waist_um"] * 1e-6,
            wavelength_m=f["wavelength_nm"] * 1e-9,
            center_x_m=f["center_x_um"] * 1e-6,
            center_t_s=f["center_t_us"] * 1e-6,
            sigma_t_s=sigma,
            detuning_rads=percm_to_rads(f["detuning_percm"]) if role == "probe" else 0.0,
        )

    def delta_p_rads(self) -> float:
        return percm_to_rads(self.values["probe"]["detuning_percm"])

    def delta_p_demo_rads(self) -> float:
        return mhz_to_rads(self.values["schedule"]["delta_p_demo_ghz"] * 1e3)

    def gamma_rads(self) -> float:
        return mhz_to_rads(self.values["levels"]["gamma_mhz"])

    def level_system(
        self,
        delta_p_rads: float,
        delta_two_rads: float,
        gamma_rads: float = 0.0,
        optical_omega_p_rads: float = 0.0,
        optical_omega_c_rads: float = 0.0,
    ) -> LevelSystem:
        lv = self.values["levels"]
        return extended_system(
            n_levels=lv["model"],
            delta_p=delta_p_rads,
            delta_two=delta_two_rads,
            gamma_rads=gamma_rads,
            coupling_scale=lv["coupling_scale"],
            rotational_offset_rads=percm_to_rads(lv["rotational_offset_percm"]),
            anharmonic_offset_rads=percm_to_rads(lv["anharmonic_offset_percm"]),
            extra_ratio=lv["extra_ratio"],
            optical_omega_p_rads=optical_omega_p_rads,
            optical_omega_c_rads=optical_omega_c_rads,
        )

    def slit_geometry(self):
        from .beamline import SlitGeometry

        b = self.values["beamline"]
        return SlitGeometry(
            z_m=tuple(b["slit_z_m"]),
            width_m=tuple(w * 1e-6 for w in b["slit_width_um"]),
            center_m=tuple(c * 1e-6 for c in b["slit_center_um"]),
        )

    def target_level(self) -> RoLevel:
        return RoLevel("X", 0, self.values["beamline"]["target_j"])

    # ---- validation -------------------------------------------------

    def validate(self) -> None:
        """Cross-field checks; runs before any computation."""
        r = self.values["run"]
        if r["mode"] not in RUN_MODES:
            raise ConfigError(f"[run] mode must be one of {RUN_MODES}, got {r['mode']!r}")
        if self.values["levels"]["model"] not in MODEL_SIZES:
            raise ConfigError(
                f"[levels] model must be one of {MODEL_SIZES}, got {self.values['levels']['model']}"
            )
        spec = self.molecule_spec()
        geometry = self.beam_geometry()
        probe = self.field_profile("probe")
        control = self.field_profile("control")
        if not control.center_t_s < probe.center_t_s:
            raise ConfigError(
                "counter-intuitive ordering violated: [control] center_t_us must be"
                " earlier than [probe] center_t_us"
            )
        if self.values["probe"]["detuning_percm"] == 0:
            raise ConfigError("[probe] detuning_percm must be nonzero")

        b = self.values["beamline"]
        slits = self.slit_geometry()
        if not 0 <= b["target_j"] <= spec.j_max:
            raise ConfigError("[beamline] target_j outside the populated 0..j_max range")
        if b["n_molecules"] <= 0:
            raise ConfigError("[beamline] n_molecules must be positive")
        if b["x_grid_points"] < 2 or b["t_grid_points"] < 2:
            raise ConfigError("[beamline] force grids need at least two points per axis")
        if b["dt_ns"] <= 0:
            raise ConfigError("[beamline] dt_ns must be positive")

        t_half = self.t_grid_halfwidth_s(probe, control)
        dtau = 2.0 * t_half / (b["t_grid_points"] - 1)
        dt_s = b["dt_ns"] * 1e-9
        if dt_s > dtau:
            raise ConfigError(
                f"[beamline] dt_ns {b['dt_ns']:g} does not resolve the force grid"
                f" time step ({dtau * 1e9:.3g} ns); reduce dt_ns or t_grid_points"
            )
        z2, z3 = slits.z_m[1], slits.z_m[2]
        v = b["v_z_mean_mps"]
        if not z2 < b["laser_z_m"] < z3:
            raise ConfigError("[beamline] laser_z_m must sit between slits 2 and 3")
        if b["laser_z_m"] - v * t_half <= z2 or b["laser_z_m"] + v * t_half >= z3:
            raise ConfigError(
                "[beamline] interaction window extends past a slit; shrink"
                " t_grid_halfwidth_us or move laser_z_m"
            )
        x_half = b["x_grid_halfwidth_um"] * 1e-6
        reach = max(
            abs(slits.center_m[1]) + 0.5 * slits.width_m[1],
            abs(slits.center_m[2]) + 0.5 * slits.width_m[2],
        )
        if x_half < reach:
            raise ConfigError("[beamline] x grid narrower than the slits it must cover")

        for key in ("power_w_list", "waist_um_list", "delta_p_percm_list", "temperature_k_list"):
            vals = self.values["sweep"][key]
            if any(v <= 0 for v in vals) and key != "delta_p_percm_list":
                raise ConfigError(f"[sweep] {key} entries must be positive")
            if key == "delta_p_percm_list" and any(v == 0 for v in vals):
                raise ConfigError("[sweep] delta_p_percm_list entries must be nonzero")

        li = self.values["li6demo"]
        if li["split_mhz"] < 0:
            raise ConfigError("[li6demo] split_mhz must be non-negative")
        if li["mass_amu"] <= 0 or li["n_molecules"] <= 0:
            raise ConfigError("[li6demo] mass and molecule count must be positive")

        s = self.values["schedule"]
        if s["stirap_mode"] not in ("hold_superposition", "complete_transfer_back"):
            raise ConfigError("[schedule] stirap_mode must be hold_superposition or complete_transfer_back")
        if s["n_record"] < 2:
            raise ConfigError("[schedule] n_record must be at least 2")
        if s["rtol"] <= 0 or s["atol"] <= 0:
            raise ConfigError("[schedule] tolerances must be positive")
        if s["stirap_omega_p_mhz"] <= 0 or s["stirap_omega_c_mhz"] <= 0:
            raise ConfigError("[schedule] stirap peak frequencies must be positive")
        if s["delta_p_demo_ghz"] == 0:
            raise ConfigError("[schedule] delta_p_demo_ghz must be nonzero")

    def t_grid_halfwidth_s(self, probe: FieldProfile, control: FieldProfile) -> float:
        half = self.values["beamline"]["t_grid_halfwidth_us"] * 1e-6
        if half <= 0:
            half = 4.5 * max(probe.sigma_t_s, control.sigma_t_s) + max(
                abs(probe.center_t_s), abs(control.center_t_s)
            )
        return half


def default_config() -> RunConfig:
    values = {
        section: {key: (list(default) if isinstance(default, list) else default)
                  for key, (_, default) in keys.items()}
        for section, keys in SCHEMA.items()
    }
    return RunConfig(values=values)


def load_config(path: str | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read an INI file onto the defaults, apply CLI overrides, validate.

    overrides keys: model, seed, output_dir (None entries ignored).
    """
    cfg = default_config()
    text = None
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        parser = configparser.ConfigParser(
            interpolation=None,
            inline_comment_prefixes=("#", ";"),
            strict=True,
        )
        parser.optionxform = str  # unit suffixes are case-sensitive
        try:
            parser.read_string(text, source=path)
        except configparser.Error as exc:
            # configparser messages already carry their own line anchors
            raise ConfigError(f"malformed config file: {exc}") from exc
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(
                    f"unknown section [{section}]{_line_of(text, section)} in {path}"
                )
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(
                        f"unknown key {key!r} in [{section}]"
                        f"{_line_of(text, section, key)} of {path}"
                    )
                kind = SCHEMA[section][key][0]
                where = f"[{section}] {key}{_line_of(text, section, key)}"
                cfg.values[section][key] = _convert(kind, raw, where)
        cfg.source_path = path

    if overrides:
        if overrides.get("model") is not None:
            cfg.values["levels"]["model"] = int(overrides["model"])
        if overrides.get("seed") is not None:
            cfg.values["run"]["seed"] = int(overrides["seed"])
        if overrides.get("output_dir") is not None:
            cfg.values["run"]["output_dir"] = str(overrides["output_dir"])
        if overrides.get("mode") is not None:
            cfg.values["run"]["mode"] = str(overrides["mode"])

    cfg.validate()
    return cfg
