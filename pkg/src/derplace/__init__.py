"""derplace: stability-screened placement of inverter DERs on radial feeders.

The library evaluates whether a configuration of actuator-performance node
pairs admits stabilizing integrator gains, using a linearized three-phase
branch-flow model and an eigenvalue/nullity test, and builds placement
heatmaps from the resulting stable fractions.
"""

from .control import (
    APNP,
    Configuration,
    ConfigurationError,
    GainBounds,
    GainSample,
    SamplingParams,
    assemble_B,
    assemble_state_space,
    build_F,
    closed_loop,
    gain_bounds,
    sample_gains,
    structural_identity,
)
from .feeder import (
    Branch,
    Feeder,
    FeederFormatError,
    FeederValidationError,
    Line,
    Node,
    UnknownNodeError,
    branches,
    classify_node,
    feeder_from_dict,
    feeder_to_dict,
    main_branch,
    nodal_distance,
    parse_feeder,
    path_to_substation,
    serialize_feeder,
)
from .placement import (
    AutoTrialStats,
    BranchStat,
    Heatmap,
    HeatmapEntry,
    PlacementRejectedError,
    Session,
    accept_placement,
    branch_stats,
    color_of,
    heatmap_colocated,
    heatmap_npp,
    new_session,
    run_auto_ocpp,
    run_ocpp,
    undo,
)
from .sensitivity import SensitivityMatrices, build_RX, check_pd, state_index
from .sim import (
    DisturbanceEvent,
    DisturbanceSchedule,
    TargetEvent,
    Trajectory,
    disturbance_offsets,
    simulate,
    tracking_converged,
)
from .stability import (
    StabilityVerdict,
    StableFractionResult,
    Tolerances,
    UnitEigenvalue,
    check_sisl,
    stable_fraction,
    unit_eigvec_support,
)

__version__ = "0.1.0"
