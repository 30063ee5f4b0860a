"""Second-order interference of chaotic light.

Closed-form photon-number fluctuation correlations for two-pinhole and
tilted-mirror geometries, the polarization two-qubit gate they realize, and a
stochastic-field Monte-Carlo estimator that serves as the numerical reference
for every closed form.
"""

from .core import (
    C_LIGHT,
    analyzer_vector,
    bs_block,
    fresnel_phase,
    jones_element,
    jones_flip,
    jones_identity,
    jones_polarizer_h,
    jones_polarizer_v,
    jones_rotation,
    sinc,
    tophat_ft,
    wrap_angle,
)
from .geometry import (
    ConditionWarning,
    GateAngles,
    ParaxialWarning,
    SetupBasic,
    SetupGate,
    SetupMZ,
)
from .analytic import (
    CorrelationPattern,
    PairContribution,
    b_phase,
    check_pair_conditions,
    coherence_length,
    dn_corr_basic,
    fringe_period_xc,
    g1_pair,
    pattern_visibility,
    phase_phi_basic,
    separation_ratios,
)
from .gate import (
    BlockMatrix,
    TruthTable,
    cnot_condition_margin,
    cnot_truth_table,
    compose_network,
    dn_corr_gate,
    dn_corr_mz,
    envelope_power,
    ideal_cnot_table,
    mz_condition_margins,
    mz_phase,
    p_cnot,
    p_controlled_u,
)
from .montecarlo import (
    EnsembleEstimate,
    Realization,
    SourceModel,
    compare_patterns,
    estimate_dn_corr,
    estimate_mean_intensity,
    estimate_truth_table,
    field_at_detector,
    free_field,
    sample_realization,
)
from .patterns import evaluate_pattern, make_grid

__version__ = "0.1.0"
