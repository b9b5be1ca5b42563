"""Anypath routing with DSEE-scheduled link-probability learning."""

from .anypath import (
    INF,
    ForwardingEntry,
    ForwardingTable,
    InfiniteCostError,
    anypath_distance,
    brute_force_anypath,
    evaluate_table_cost,
    hyperlink_cost,
    hyperlink_delivery_ratio,
    relay_weights,
    remaining_cost,
    shortest_anypath_first,
    single_path_distance,
)
from .channel import (
    PacketTrace,
    ReceptionOutcome,
    broadcast,
    make_rng,
    probe_all_links,
    route_packet,
    sample_link,
)
from .experiment import (
    AggregateTrace,
    EpochSimulator,
    ExperimentConfig,
    ExperimentResult,
    Policy,
    RegretTrace,
    genie_cost,
    read_aggregate,
    read_trace,
    run_epoch,
    run_experiment,
    slot_regret,
    write_aggregate,
    write_trace,
)
from .learning import (
    BudgetMode,
    DseeState,
    LinkEstimator,
    Phase,
    dsee_step,
    egreedy_step,
    exploration_budget,
    thompson_estimates,
)
from .topology import (
    BUNDLED_TOPOLOGIES,
    Link,
    NodeNeighborhood,
    Topology,
    TopologyError,
    bundled_topology,
    bundled_topology_path,
    load_topology,
    max_out_degree,
    neighbors,
    parse_topology,
    random_topology,
    serialize_topology,
)

__version__ = "0.1.0"
