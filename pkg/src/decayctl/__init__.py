"""Decay-rate control of a level coupled to a continuum under weak temporal modulation.

The decay rate over a window of length t is the overlap of the reservoir
coupling spectrum G with the normalized modulation spectrum F_t:
R(t) = 2 pi int G(omega + omega_a) F_t(omega) d omega, and the survival
probability is exp(-R(t) Q(t)) with Q the accumulated coupling time.
"""

from .modulation import (
    Constant,
    HarmonicDecomposition,
    ImpulsivePM,
    MeasurementSinc,
    ModulationError,
    Monochromatic,
    OnOffAM,
    Quasiperiodic,
    RandomLorentzian,
    UnsupportedOperation,
    WindowSpectrum,
    chaotic_field_params,
    eval_epsilon,
    fluence,
    harmonic_decomposition,
    stationary_spectrum,
    time_for_fluence,
    window_spectrum,
)
from .optimizer import (
    AMFamily,
    Band,
    ControlProblem,
    ControlResult,
    FreeHarmonics,
    MonochromaticFamily,
    PMFamily,
    band_rate,
    band_survival,
    compare_schemes,
    optimize,
)
from .rate_engine import (
    DecayCurve,
    QuadratureError,
    longtime_rate,
    survival_curve,
    truncation_error_bound,
    universal_rate,
    validity_ratio,
)
from .spectra import (
    BandEdge,
    CouplingSpectrum,
    FlatCutoff,
    LorentzianPeak,
    ParametricLatticePeak,
    SpectrumError,
    Tabulated,
    correlation_time,
    eval_G,
    golden_rule_rate,
    response_function,
    spectral_scale_xi,
)
from .volterra import AmplitudeTrajectory, ComparisonReport, StepTooCoarse, compare_with_universal, solve

__version__ = "0.1.0"
