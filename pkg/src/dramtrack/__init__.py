"""Per-bank models of in-DRAM activation trackers.

State machines for the tracker families, adversarial activation patterns,
closed-form reliability analytics (run-of-failures recurrence, threshold
searches, postponement and triggered-mitigation variants) and seeded Monte
Carlo validation, plus a CSV-emitting command line front end.
"""

from .analytics import (
    CONCURRENT_BANKS,
    DEFAULT_TARGET_BANK_YEARS,
    RFM_RATE_LABELS,
    ThresholdResult,
    ada_min_trh,
    ada_worst_case,
    comparison_table,
    decoy_exposure,
    dmq_adjust,
    failure_curve,
    feinting_limit,
    markov_distribution,
    maxact_ratio_sweep,
    min_trh,
    mttf_bank_years,
    mttf_system_years,
    nonselection_probability,
    nooverwrite_sampling,
    p_refw,
    para_effective_p,
    para_postponed_min_trh,
    pattern_sweep,
    postponement_table,
    rfm_min_trh,
    survival_probability,
    target_failure_probability,
    target_ttf_table,
    tracker_min_trh,
    transitive_exposure,
)
from .attacks import (
    PATTERN_KINDS,
    AdaPattern,
    FeintingAdversary,
    PatternSpec,
    ada_pattern,
    build_pattern,
    feinting_step,
    gen_static,
)
from .dram import (
    MAX_POSTPONE,
    REFI_PER_WINDOW,
    ROW_ADDRESS_BITS,
    DerivedParams,
    DramTimings,
    RefreshSchedule,
    activation_budget,
    check_row,
    derive_params,
    round_fraction,
)
from .errors import ContractViolationError, UnreachableTargetError
from .montecarlo import (
    FailureReport,
    MCEstimate,
    TrialConfig,
    estimate,
    estimate_p_refw,
    random_ref_schedule,
    run_trial,
)
from .rowpress import (
    CAN_RAW_BITS,
    FIXED_POINT_ONE,
    MintRowPressState,
    OpenEvent,
    eact,
    mint_rowpress_cycle,
)
from .trackers import (
    DMQ_CAPACITY,
    TRACKER_KINDS,
    DmqTracker,
    InDramParaState,
    MintState,
    MisraGriesState,
    MitigationDecision,
    ParfmState,
    PrctState,
    RfmTracker,
    TrackerSpec,
    build_tracker,
    dmq_wrap,
    rfm_wrap,
)

__version__ = "0.1.0"
