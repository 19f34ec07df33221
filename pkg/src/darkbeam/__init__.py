"""Dressed-state purification of molecular beams.

A pair of far-detuned crossed laser beams addresses one rotational level
of a molecular beam through a two-photon resonance. The resonant level
rides a force-free decoupled eigenstate straight through the light; every
other level feels a dispersive dipole force and is deflected into a slit.
The package covers the level structure, the dressed eigensystem and the
forces it exerts, time-dependent propagation through the crossing, and a
Monte Carlo beamline that scores the resulting state purity.
"""

from .beamline import (
    Ensemble,
    ForceTable,
    PurificationReport,
    SeparationCheck,
    SlitGeometry,
    TrajectoryResult,
    build_force_table,
    depth_separation_ratio,
    doppler_spread,
    force_table_from_offsets,
    propagate_ensemble,
    purification_report,
    sample_ensemble,
    score_purification,
    separation_criterion,
)
from .config import RunConfig, default_config, load_config
from .dressed import (
    DressedSolution,
    PotentialSurface,
    dark_state,
    eigensystem,
    force,
    force_grid,
    hellmann_feynman_force,
    potential_surface,
    track_adiabatic,
)
from .errors import ConfigError, NumericError, PropagationError, TrackingError
from .fields import BeamGeometry, FieldProfile, sigma_t_from_geometry
from .hamiltonian import (
    ExtraCoupling,
    HamiltonianMatrix,
    LevelSystem,
    build_extended,
    build_lambda,
    extended_system,
    lambda_system,
    rabi_frequency,
)
from .molecule import (
    MoleculeSpec,
    RoLevel,
    lirb_spec,
    raman_partner,
    rotational_energy,
    thermal_populations,
    two_photon_offset,
)
from .tdse import (
    FollowReport,
    PropagationResult,
    PulseSchedule,
    StirapResult,
    adiabatic_following_report,
    dressed_projection,
    propagate,
    stirap_schedule,
    stirap_sequence,
)

__version__ = "0.1.0"
