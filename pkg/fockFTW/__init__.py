from .errors import FockDomainError, UnheraldableError, InsufficientDataError, InputFormatError
from .fock_core import (
    FockCutoff, DensityMatrix, PureState, fock_state, annihilation_matrix, number_matrix,
    dm_from_diag, fidelity, mean_photon, derive_rng,
)
from .herald_model import (
    HeraldScenario, PnrPovmElement, tmsv_coefficients, pnr_povm, herald_probability,
    herald_distribution, truncation_residual, apply_loss, conditional_signal_state,
)
from .homodyne_sim import (
    QuadratureRecord, PhasePolicy, hermite_functions, quadrature_grid, quad_pdf,
    sample_quadratures, read_quadrature_csv, write_quadrature_csv,
)
from .trace_pipeline import (
    SlotRecord, TraceEvent, ThresholdConfig, ShotNoiseCalibration, HeraldedSlot, classify_pnr,
    veto_two_photon_events, calibrate_shot_noise, normalize_quadrature, extract_quadratures,
    slot_variance_profile, read_events_jsonl, write_events_jsonl, synthesize_trace_events,
)
from .tomography import MleConfig, MleResult, projector_weights, log_likelihood, mle_reconstruct
from .analysis import (
    WignerGrid, BootstrapReport, wigner_point, wigner_values, wigner_grid, refine_radial_minimum,
    photon_distribution, parse_statistic, bootstrap, bootstrap_many, quadrature_histogram,
    photon_number_table,
)
from .formatting import format_number, format_percent

__all__ = [
    'FockDomainError', 'UnheraldableError', 'InsufficientDataError', 'InputFormatError',
    'FockCutoff', 'DensityMatrix', 'PureState', 'fock_state', 'annihilation_matrix', 'number_matrix',
    'dm_from_diag', 'fidelity', 'mean_photon', 'derive_rng',
    'HeraldScenario', 'PnrPovmElement', 'tmsv_coefficients', 'pnr_povm', 'herald_probability',
    'herald_distribution', 'truncation_residual', 'apply_loss', 'conditional_signal_state',
    'QuadratureRecord', 'PhasePolicy', 'hermite_functions', 'quadrature_grid', 'quad_pdf',
    'sample_quadratures', 'read_quadrature_csv', 'write_quadrature_csv',
    'SlotRecord', 'TraceEvent', 'ThresholdConfig', 'ShotNoiseCalibration', 'HeraldedSlot', 'classify_pnr',
    'veto_two_photon_events', 'calibrate_shot_noise', 'normalize_quadrature', 'extract_quadratures',
    'slot_variance_profile', 'read_events_jsonl', 'write_events_jsonl', 'synthesize_trace_events',
    'MleConfig', 'MleResult', 'projector_weights', 'log_likelihood', 'mle_reconstruct',
    'WignerGrid', 'BootstrapReport', 'wigner_point', 'wigner_values', 'wigner_grid', 'refine_radial_minimum',
    'photon_distribution', 'parse_statistic', 'bootstrap', 'bootstrap_many', 'quadrature_histogram',
    'photon_number_table',
    'format_number', 'format_percent',
]
