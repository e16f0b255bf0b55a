"""Truncated Fock-space simulator of probabilistic noiseless amplification of
coherent light: amplifier figures of merit, a heralded physical model, lossy
homodyne detection, maximum-likelihood tomography, and Wigner-function
analysis, all in a single shot-noise-unit convention."""

__version__ = "0.1.0"

from .fock import (
    DensityMatrix,
    FockCutoff,
    PureState,
    apply_ladder,
    coherent_state,
    default_cutoff,
    expectation,
    fock_state,
    mean_photon,
    mean_x,
    state_fidelity,
    vacuum_state,
    var_x,
)
from .amplifiers import (
    AmplifierReport,
    AmplifierSpec,
    amplify_ideal,
    deterministic_noise_bounds,
    effective_gain_analytic,
    effective_gain_numeric,
    equivalent_input_noise,
    fidelity_analytic,
    fidelity_numeric,
    g_operator,
    ideal_amplifier_report,
    phase_estimation_metrics,
    scissors_metrics,
    scissors_output,
)
from .physical import (
    HeraldedResult,
    TwoModeState,
    fidelity_to_ideal_amplifier,
    heralded_addition,
    heralded_subtraction,
    physical_amplifier,
)
from .homodyne import (
    GainEstimate,
    QuadratureDataset,
    gain_from_samples,
    loss_channel,
    quadrature_pdf,
    sample_quadratures,
    uniform_phases,
)
from .tomography import (
    ReconstructionResult,
    TomographySettings,
    amplified_fidelity_diagnostic,
    maxlik_reconstruct,
    measurement_operator,
)
from .wigner import (
    WignerGrid,
    mixture,
    phase_shift,
    wigner_function,
    wigner_marginal,
    wigner_overlap,
)

__all__ = [
    "AmplifierReport",
    "AmplifierSpec",
    "DensityMatrix",
    "FockCutoff",
    "GainEstimate",
    "HeraldedResult",
    "PureState",
    "QuadratureDataset",
    "ReconstructionResult",
    "TomographySettings",
    "TwoModeState",
    "WignerGrid",
    "amplified_fidelity_diagnostic",
    "amplify_ideal",
    "apply_ladder",
    "coherent_state",
    "default_cutoff",
    "deterministic_noise_bounds",
    "effective_gain_analytic",
    "effective_gain_numeric",
    "equivalent_input_noise",
    "expectation",
    "fidelity_analytic",
    "fidelity_numeric",
    "fidelity_to_ideal_amplifier",
    "fock_state",
    "g_operator",
    "gain_from_samples",
    "heralded_addition",
    "heralded_subtraction",
    "ideal_amplifier_report",
    "loss_channel",
    "maxlik_reconstruct",
    "mean_photon",
    "mean_x",
    "measurement_operator",
    "mixture",
    "phase_estimation_metrics",
    "phase_shift",
    "physical_amplifier",
    "quadrature_pdf",
    "sample_quadratures",
    "scissors_metrics",
    "scissors_output",
    "state_fidelity",
    "uniform_phases",
    "vacuum_state",
    "var_x",
    "wigner_function",
    "wigner_marginal",
    "wigner_overlap",
]
