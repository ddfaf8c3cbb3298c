"""Stimulated electron-photon interaction of a free-electron wavepacket:
closed-form perturbation theory plus a split-operator envelope solver.

Internal unit system: hbar = m_e = c = 1 (electron natural units), so the
Compton wavelength is 2*pi, momenta are in units of m_e*c and electric
fields in units of the Schwinger field.  SI conversion happens only at the
I/O boundary (see :mod:`ewave.constants` and :mod:`ewave.config`).
"""

from .constants import NATURAL, SCALES, SI, PhysicalConstants, UnitScales
from .params import (
    BeamState,
    FieldDrive,
    InteractionParams,
    QEDLink,
    SourceWavepacket,
    beam_from_gamma,
    critical_drift_length,
    cutoff_wavelength,
    drive_from_upsilon,
    gamma_sp_from_upsilon,
    interaction_params,
    make_drive,
    make_source,
    qed_coupling,
    sinc,
    wavepacket_size_at,
)
from .perturbation import (
    EnsembleSpec,
    MomentumGrid,
    RegimeWarning,
    ResolutionCheck,
    SpectrumResult,
    compute_spectrum,
    dp1,
    dp2,
    dp2_classical_limit,
    dp_point,
    ensemble_average,
    make_momentum_grid,
    normalization_denominator,
    pinem_spectrum,
    resolution_bound,
    rho0,
    rho1_general,
    rho1_simplified,
    rho2,
    stimulated_rate,
)
from .solver import (
    EvolutionReport,
    FieldWindow,
    Observables,
    SpatialGrid,
    WavefunctionState,
    band_weights,
    evolve,
    init_gaussian,
    make_spatial_grid,
    max_stable_dt,
    momentum_density,
    observables,
    operator_truncation_audit,
    step,
)
from .scenarios import (
    DetuningTable,
    PhaseAccelResult,
    PinemResult,
    ScanRow,
    ScenarioError,
    ScenarioSpec,
    SweepAxis,
    run_fel_detuning,
    run_gamma_scan,
    run_phase_acceleration,
    run_pinem,
    run_scenario,
)

__version__ = "0.1.0"
