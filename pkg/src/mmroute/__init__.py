"""Multi-modal public transit routing with precomputed transfer shortcuts."""

from .model import (
    INF,
    ContractViolation,
    InfeasibleJourney,
    Journey,
    ParetoLabel,
    PublicTransitNetwork,
    Route,
    Stop,
    Transfer,
    TransferGraph,
    Trip,
    TripLeg,
    dominates,
    journey_signature,
    partition_trips_into_routes,
    prune_pareto,
    validate_journey,
    validate_network,
)
from .ch import (
    BucketStore,
    ContractionHierarchy,
    CoreGraph,
    build_buckets,
    bucket_query,
    contract_core,
    contract_full,
    pruned_pair_query,
    reverse_bucket_query,
)
from .shortcuts import (
    PreprocessParams,
    ShortcutGraph,
    compute_shortcuts,
    merge_worker_shortcuts,
    zero_groups,
)
from .queries import (
    ConnectionArray,
    QueryResult,
    Timetable,
    build_connections,
    csa_query,
    mcsa_query,
    mr_inf_query,
    raptor_query,
    reconstruct_journey,
    ultra_csa_query,
    ultra_raptor_query,
)
from .oracle import (
    GeneratorParams,
    ParetoOracle,
    SampleSpec,
    SufficiencyReport,
    enumerate_pareto,
    generate_network,
    sample_queries,
    verify_sufficiency,
)
from .io import (
    load_network,
    load_shortcuts,
    save_network,
    save_shortcuts,
)

__all__ = [name for name in dir() if not name.startswith("_")]
