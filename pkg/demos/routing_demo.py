"""Follow a few messages through the key graph.

A message moves only between nodes that share a key.  Inside a cluster it
takes the key-peer closest to the destination; across clusters it goes
through the two heads over their long-range link.
"""
import numpy as np

from sensorkeys import SimConfig, deliver, init_state, initial_clustering

cfg = SimConfig(node_count=600, area=(500.0, 500.0), short_range=300.0,
                target_cluster_size=150, p_target=0.5, seed=9)
state = initial_clustering(init_state(cfg))
rng = np.random.default_rng(1)

for _ in range(5):
    src, dst = (int(x) for x in rng.choice(cfg.node_count, size=2, replace=False))
    r = deliver(src, dst, state)
    up, across, down = r.segments
    same = state.cluster[src] == state.cluster[dst]
    detail = "within one cluster" if same else f"up {up}, heads {across}, down {down}"
    print(f"{src:3d} -> {dst:3d}: {r.outcome.value}, {r.hops} hops ({detail})")

print(f"energy spent: total {state.energy.sum():.0f}, busiest node {state.energy.max():.0f}")
