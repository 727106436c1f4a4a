"""Birthday-problem sizing of key rings and base-station key installation.

A node shares pairwise keys with ``s`` peers of its own cluster, where ``s``
is the smallest count for which ``1 - (1 - 1/n)**C(s, 2)`` reaches the target
probability for a cluster of ``n`` nodes.  The base station is modelled as an
instantaneous, reliable channel protected by each node's preloaded base key.
"""
from __future__ import annotations

import math

import numpy as np

from .clustering import choose_head
from .model import Cluster, NetworkState, NO_CLUSTER, Radio, Status


def exact_birthday_probability(n: int, d: int) -> float:
    """Probability that ``n`` draws from ``d`` equally likely values collide.

    Evaluated as ``1 - prod((d - i) / d)`` which equals ``1 - n! C(d, n) / d**n``
    without forming the factorials.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > d:
        return 1.0
    q = 1.0
    for i in range(n):
        q *= (d - i) / d
    return 1.0 - q


def approx_share_probability(s: int, n: int) -> float:
    if n < 2:
        raise ValueError("cluster size n must be >= 2")
    if s < 0:
        raise ValueError("s must be >= 0")
    pairs = s * (s - 1) // 2
    # expm1/log1p keep precision when 1/n is tiny
    return -math.expm1(pairs * math.log1p(-1.0 / n))


def required_share_count(p_target: float, n: int) -> int:
    """Smallest ``s >= 1`` with ``approx_share_probability(s, n) >= p_target``."""
    if n < 2:
        raise ValueError("cluster size n must be >= 2")
    if not 0.0 <= p_target < 1.0:
        raise ValueError("p_target must lie in [0, 1)")
    s = 1
    while approx_share_probability(s, n) < p_target:
        s += 1
    return s


def share_count_for(p_target: float, n: int) -> int:
    """``required_share_count`` capped at ``n - 1`` peers (0 for a lone node)."""
    if n < 2:
        return 0
    return min(required_share_count(p_target, n), n - 1)


def _drop_intra_keys(state: NetworkState, members: list[int]) -> None:
    # cross-cluster entries are head-to-head keys; they survive a refresh
    member_set = set(members)
    for m in members:
        ring = state.rings[m].pairwise
        for peer in [q for q in ring if q in member_set]:
            del ring[peer]


def distribute_cluster_keys(state: NetworkState, cluster: Cluster, s: int,
                            rng: np.random.Generator | None = None) -> NetworkState:
    """Replace every intra-cluster key of ``cluster`` with fresh ones.

    Each member draws ``s`` distinct peers uniformly from the rest of the
    cluster; every drawn pair (in either direction) gets one new key, so the
    realised key count per node is at least ``s``.
    """
    rng = state.rng if rng is None else rng
    members = sorted(cluster.members)
    n = len(members)
    if s < 0 or (n >= 1 and s >= n) or (n == 0 and s > 0):
        raise ValueError(f"s={s} must be below cluster size {n}")
    _drop_intra_keys(state, members)
    cluster.share_count = s
    for m in members:
        state.rings[m].epoch = cluster.epoch
    if s == 0 or n < 2:
        return state

    # a uniform s-subset of the other members for every row
    noise = rng.random((n, n))
    np.fill_diagonal(noise, np.inf)
    peers = np.argpartition(noise, s - 1, axis=1)[:, :s]
    a = np.repeat(np.arange(n), s)
    b = peers.ravel()
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    codes = np.unique(lo * n + hi)
    keys = state.draw_key_ids(len(codes))
    rings = [state.rings[m].pairwise for m in members]
    for code, key in zip(codes.tolist(), keys):
        i, j = divmod(code, n)
        rings[i][members[j]] = key
        rings[j][members[i]] = key
    return state


def install_head_keys(state: NetworkState) -> NetworkState:
    """Give every pair of heads within long radio range a shared key.

    Existing head keys for pairs that are still in range are kept; keys
    between heads that drifted apart, or involving demoted nodes, are dropped.
    """
    heads = sorted(state.heads())
    head_set = set(heads)
    if not heads:
        return state
    reach2 = state.config.long_range ** 2
    pos = state.pos[heads]
    d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=2)
    in_range = {(heads[i], heads[j])
                for i, j in zip(*np.nonzero(np.triu(d2 <= reach2, k=1)))}

    for h in heads:
        own = state.cluster[h]
        for q in list(state.rings[h].pairwise):
            if state.cluster[q] == own:
                continue
            pair = (min(h, q), max(h, q))
            if q not in head_set or pair not in in_range:
                state.unlink(h, q)

    missing = sorted(p for p in in_range if p[1] not in state.rings[p[0]].pairwise)
    for (p, q), key in zip(missing, state.draw_key_ids(len(missing))):
        state.link(p, q, key)
    return state


def head_key_count(state: NetworkState, head: int) -> int:
    own = state.cluster[head]
    return sum(1 for q in state.rings[head].pairwise if state.cluster[q] != own)


def key_all_clusters(state: NetworkState) -> NetworkState:
    """Fresh intra-cluster keys for every cluster, then head-to-head keys."""
    p = state.config.p_target
    for cid in sorted(state.clusters):
        c = state.clusters[cid]
        distribute_cluster_keys(state, c, share_count_for(p, c.size))
    return install_head_keys(state)


def vacate_cluster(state: NetworkState, node: int) -> bool:
    """Take ``node`` out of its cluster; re-elect or delete as needed.

    Returns True when the head set changed (callers refresh head keys).
    """
    cid = int(state.cluster[node])
    state.cluster[node] = NO_CLUSTER
    if cid == NO_CLUSTER:
        return False
    old = state.clusters[cid]
    old.members.discard(node)
    was_head = old.head == node
    if was_head:
        state.radio[node] = Radio.SHORT
    if not old.members:
        del state.clusters[cid]
        return was_head
    if was_head:
        old.head = choose_head(state, old.members, old.mean)
        state.radio[old.head] = Radio.LONG
    return was_head


def refresh_on_transfer(state: NetworkState, node: int, new_cluster: Cluster,
                        rng: np.random.Generator | None = None) -> NetworkState:
    """Move ``node`` into ``new_cluster`` and issue it a fresh key set.

    Every old key (and its mirror at the former peer) is wiped first.  The
    node then draws ``s`` peers sized for the enlarged cluster.
    """
    rng = state.rng if rng is None else rng
    if state.status[node] != Status.ACTIVE:
        raise ValueError(f"node {node} is not active")
    if new_cluster.id not in state.clusters:
        raise KeyError(f"cluster {new_cluster.id} does not exist")

    state.clear_ring(node)
    heads_changed = vacate_cluster(state, node)

    new_cluster.members.add(node)
    state.cluster[node] = new_cluster.id
    if len(new_cluster.members) == 1:
        new_cluster.head = node
        heads_changed = True
    state.radio[node] = Radio.LONG if new_cluster.head == node else Radio.SHORT
    state.rings[node].epoch = new_cluster.epoch

    others = sorted(new_cluster.members - {node})
    s = share_count_for(state.config.p_target, len(new_cluster.members))
    if s:
        picks = rng.choice(len(others), size=s, replace=False)
        chosen = sorted(others[i] for i in picks)
        for q, key in zip(chosen, state.draw_key_ids(s)):
            state.link(node, q, key)
    if heads_changed:
        install_head_keys(state)
    return state
