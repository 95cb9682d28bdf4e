"""Entanglement spreading in XX spin chains with long-range-correlated disorder."""

from ._accel import backend_name
from .chain import ChainSpec, HoppingMatrix, build_hamiltonian, ordered_spectrum
from .disorder import (
    DisorderSequence,
    DisorderSpec,
    generate_correlated_sequence,
    hurst_exponent,
    lag_autocorrelation,
    spectral_slope,
)
from .ensemble import (
    ConcurrenceMapRequest,
    EnsembleConfig,
    EnsembleResult,
    EntropyScanRequest,
    EvolveRequest,
    MaxConcurrenceRequest,
    TransmissionRequest,
    derive_seed,
    run_ensemble,
)
from .errors import (
    BesselRangeError,
    BoundaryContaminationError,
    DegenerateSequenceError,
    EnsembleError,
    InsufficientDataError,
    InvalidInputError,
    InvalidPairError,
    InvalidSpecError,
    InvalidStateError,
    MagnonError,
    NumericalFailure,
)
from .observables import (
    ConcurrenceMap,
    TransmissionReport,
    TwoQubitDensity,
    block_entropy,
    concurrence_map,
    concurrence_pair,
    entropy_scan,
    external_qubit_concurrence,
    max_concurrence_map,
    reduced_density,
    stationary_window,
    transmission_reflection,
    wootters_concurrence,
)
from .oracle import (
    bell_amplitude,
    bessel_amplitude,
    bessel_j,
    bessel_j_orders,
    first_maximum_argument,
    first_maximum_time,
    plane_wave_amplitude,
)
from .propagator import (
    AmplitudeState,
    AmplitudeTrajectory,
    SpectralDecomposition,
    diagonalize,
    evolve_series,
    evolve_state,
    iter_series,
    time_grid,
)

__version__ = "0.1.0"
