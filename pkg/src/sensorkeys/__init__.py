"""Cluster-based key management simulator for mobile sensor networks."""
from .model import (
    ChurnEvent, Cluster, ConfigError, EnergyCosts, EventKind, InvariantError, KeyRing,
    Mobility, NetworkState, Node, Radio, SimConfig, Status, check_invariants,
    derive_rep_seed, init_state,
)
from .clustering import (
    ClusteringResult, build_clusters, choose_head, lloyd_refine, seed_centers, wcss,
)
from .keying import (
    approx_share_probability, distribute_cluster_keys, exact_birthday_probability,
    install_head_keys, key_all_clusters, refresh_on_transfer, required_share_count,
)
from .routing import Outcome, RouteResult, deliver, route_inter, route_intra
from .dynamics import (
    add_node, advance, compromise_fraction, detect_transfers, initial_clustering,
    mobility_step, recluster, remove_node,
)
from .harness import (
    MetricsRow, ScenarioSpec, SweepPoint, run_repetition, run_scenario, unreachable_fraction,
)

__version__ = "0.1.0"
