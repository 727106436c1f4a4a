"""Deploy a field, cluster it and look at the heads.

Nodes are scattered uniformly, grouped with k-means++ and Lloyd
refinement, and each cluster elects the member nearest its mean as head.
"""
import numpy as np

from sensorkeys import SimConfig, init_state, initial_clustering
from sensorkeys.clustering import kmeans_pp
from sensorkeys.keying import head_key_count

cfg = SimConfig(node_count=1200, area=(800.0, 800.0), short_range=450.0,
                target_cluster_size=200, seed=3)
state = initial_clustering(init_state(cfg))

print(f"{cfg.node_count} nodes, {cfg.cluster_count} clusters requested, {len(state.clusters)} built")
# a cluster wider than short radio range forces another cluster (k+1)
for cid in sorted(state.clusters):
    c = state.clusters[cid]
    h = c.head
    print(f"cluster {cid}: {c.size:4d} members, head {h:4d} at "
          f"({state.pos[h, 0]:6.1f}, {state.pos[h, 1]:6.1f}), s={c.share_count}, "
          f"head keys={head_key_count(state, h)}")

# Lloyd never increases the within-cluster sum of squares
res = kmeans_pp(state.pos, cfg.cluster_count, np.random.default_rng(0))
print("WCSS per Lloyd iteration:", " ".join(f"{w:.3g}" for w in res.history))
