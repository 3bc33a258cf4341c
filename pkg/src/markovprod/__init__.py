"""Random products of monotone box maps driven by finite-state Markov chains.

The library builds validated Markov shift specs (forward measure, time
reversal), iterates interval/box maps with rigorous enclosures, certifies
splitting of word pairs, enumerates cylinder sets exactly (float or
rational), and runs the particle, synchronization, and ergodic experiments
exposed by the `markovprod` command-line tool.
"""

from .errors import (
    BudgetExceeded,
    ConfigError,
    DegenerateCurve,
    DenominatorVanishes,
    HypothesisViolated,
    InadmissibleWord,
    InvalidMatrix,
    LastSymbolMismatch,
    LengthMismatch,
    MarkovProdError,
    NoConnector,
    NoRowPositiveState,
    NotIrreducible,
    NotMonotoneSystem,
    NotPrimitive,
    NotSelfMapping,
    OutsideDomain,
    ZeroStationaryEntry,
)
from .maps import (
    AffineMap,
    IntervalBox,
    MapSystem,
    MoebiusMap,
    box_image,
    evaluate_map,
    forward_box_chain,
    forward_orbit,
    monotone_classes,
    reverse_box,
    reverse_box_chain,
    reverse_composition,
)
from .markov_operator import (
    StateTaggedMeasure,
    apply_operator,
    build_initial,
    estimate_target,
    make_measure,
    resample,
    stability_experiment,
    wasserstein_1d,
    weak_star_distance,
)
from .oracle import (
    OracleReport,
    avoidance_measure,
    membership_measure,
    substitute_blocks,
    verify_bounds,
)
from .shift import (
    MarkovShiftSpec,
    build_shift,
    classify_matrix,
    cylinder_measure,
    inverse_transition,
    is_admissible,
    sample_word,
    sample_words,
    stationary_vector,
    stationary_vector_power,
    wielandt_bound,
)
from .splitting import (
    NormalizedPair,
    SplitWitness,
    certify_split,
    normalize_witness,
    search_witness,
    verify_split_horizon,
)
from .synchronization import (
    DecayCurve,
    coding_point,
    ergodic_average,
    fit_decay_rate,
    image_diameter_curve,
    measure_contraction_experiment,
    sync_experiment,
    weak_hyperbolicity_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "BudgetExceeded",
    "ConfigError",
    "DecayCurve",
    "DegenerateCurve",
    "DenominatorVanishes",
    "HypothesisViolated",
    "InadmissibleWord",
    "IntervalBox",
    "InvalidMatrix",
    "LastSymbolMismatch",
    "LengthMismatch",
    "MapSystem",
    "MarkovProdError",
    "MarkovShiftSpec",
    "MoebiusMap",
    "NoConnector",
    "NoRowPositiveState",
    "NormalizedPair",
    "NotIrreducible",
    "NotMonotoneSystem",
    "NotPrimitive",
    "NotSelfMapping",
    "OracleReport",
    "OutsideDomain",
    "SplitWitness",
    "StateTaggedMeasure",
    "ZeroStationaryEntry",
    "apply_operator",
    "avoidance_measure",
    "box_image",
    "build_initial",
    "build_shift",
    "certify_split",
    "classify_matrix",
    "coding_point",
    "cylinder_measure",
    "ergodic_average",
    "estimate_target",
    "evaluate_map",
    "fit_decay_rate",
    "forward_box_chain",
    "forward_orbit",
    "image_diameter_curve",
    "inverse_transition",
    "is_admissible",
    "make_measure",
    "measure_contraction_experiment",
    "membership_measure",
    "monotone_classes",
    "normalize_witness",
    "resample",
    "reverse_box",
    "reverse_box_chain",
    "reverse_composition",
    "sample_word",
    "sample_words",
    "search_witness",
    "stability_experiment",
    "stationary_vector",
    "stationary_vector_power",
    "substitute_blocks",
    "sync_experiment",
    "verify_bounds",
    "verify_split_horizon",
    "wasserstein_1d",
    "weak_hyperbolicity_experiment",
    "weak_star_distance",
    "wielandt_bound",
    "__version__",
]
