"""Nodes move, join, die and get captured.

Every membership change rekeys the affected cluster, so a captured node's
keys are useless afterwards.  The event log records each change.
"""
from sensorkeys import SimConfig, init_state, initial_clustering
from sensorkeys.dynamics import add_node, advance, compromise_fraction, remove_node
from sensorkeys.model import check_invariants

cfg = SimConfig(node_count=300, area=(400.0, 400.0), short_range=300.0,
                target_cluster_size=60, recluster_interval=25, seed=21)
state = initial_clustering(init_state(cfg))

events = advance(state, 60)
events += add_node(state, (390.0, 390.0))
events += remove_node(state, int(state.active_ids()[0]))
events += compromise_fraction(state, 0.25)
check_invariants(state)

tally = {}
for e in events:
    tally[e.kind.value] = tally.get(e.kind.value, 0) + 1
print("events:", ", ".join(f"{k}={v}" for k, v in sorted(tally.items())))
print("last few:")
for e in events[-3:]:
    print("  " + e.to_line())
print(f"{len(state.active_ids())} nodes still active in {len(state.clusters)} clusters, "
      f"epoch {state.epoch}, network flagged: {state.network_compromised}")
