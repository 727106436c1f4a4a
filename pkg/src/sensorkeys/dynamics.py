"""Mobility, cluster transfers, churn and periodic re-clustering."""
from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .clustering import build_clusters
from .keying import (
    distribute_cluster_keys, install_head_keys, key_all_clusters,
    refresh_on_transfer, share_count_for, vacate_cluster,
)
from .model import (
    Cluster, ChurnEvent, EventKind, KeyRing, NetworkState, NO_CLUSTER, Radio, Status,
)

COMPROMISE_THRESHOLD = 0.7


def mobility_step(state: NetworkState) -> NetworkState:
    """Advance every active node one random-waypoint step."""
    cfg = state.config
    m = cfg.mobility
    active = state.status == Status.ACTIVE
    extent = np.asarray(cfg.area, dtype=float)

    paused = active & (state.pause > 0)
    moving = active & (state.pause == 0)

    delta = state.waypoint - state.pos
    dist = np.hypot(delta[:, 0], delta[:, 1])
    arrive = moving & (dist <= state.speed)
    travel = moving & ~arrive
    scale = np.divide(state.speed, dist, out=np.zeros_like(dist), where=travel)
    state.pos[travel] += delta[travel] * scale[travel, None]
    state.pos[arrive] = state.waypoint[arrive]

    state.pause[paused] -= 1
    state.pause[arrive] = m.pause_steps
    redraw = np.flatnonzero(active & (state.pause == 0) & (paused | arrive))
    if len(redraw):
        rng = state.rng
        state.waypoint[redraw] = rng.uniform(0.0, 1.0, size=(len(redraw), 2)) * extent
        state.speed[redraw] = rng.uniform(m.speed_min, m.speed_max, size=len(redraw))

    np.clip(state.pos, 0.0, extent, out=state.pos)
    state.step += 1
    return state


def _means(state: NetworkState) -> tuple[list[int], np.ndarray]:
    ids = sorted(state.clusters)
    return ids, np.array([state.clusters[c].mean for c in ids]).reshape(-1, 2)


def detect_transfers(state: NetworkState) -> list[ChurnEvent]:
    """Move every active node whose nearest cluster mean is strictly closer
    than its own cluster's mean; each move wipes and reissues its keys."""
    if not state.clusters:
        return []
    ids, means = _means(state)
    active = state.active_ids()
    pts = state.pos[active]
    d2 = np.sum((pts[:, None, :] - means[None, :, :]) ** 2, axis=2)
    best = np.argmin(d2, axis=1)
    own = state.cluster[active]
    own_col = np.minimum(np.searchsorted(ids, own), len(ids) - 1)
    rows = np.arange(len(active))
    own_d2 = np.where(np.asarray(ids)[own_col] == own, d2[rows, own_col], np.inf)
    movers = np.flatnonzero(d2[rows, best] < own_d2)

    events = []
    for r in movers.tolist():
        node = int(active[r])
        target = ids[int(best[r])]
        if target not in state.clusters:
            continue  # emptied earlier in this pass
        before = int(state.cluster[node])
        refresh_on_transfer(state, node, state.clusters[target])
        events.append(state.emit(EventKind.TRANSFERRED, node,
                                 None if before == NO_CLUSTER else before, target))
    return events


def add_node(state: NetworkState, pos) -> list[ChurnEvent]:
    """Deploy a new node at ``pos``.

    It joins the nearest cluster whose mean is within short range, or else
    founds a singleton cluster and runs its long-range radio.
    """
    cfg = state.config
    p = np.asarray(pos, dtype=float)
    w, h = cfg.area
    if p.shape != (2,) or not (0 <= p[0] <= w and 0 <= p[1] <= h):
        raise ValueError(f"position {tuple(p)} outside the deployment area")

    node = state.n_nodes
    base = state.draw_key_ids(1)[0]
    existing = {r.base_key for r in state.rings}
    while base in existing:
        base = state.draw_key_ids(1)[0]
    state.pos = np.vstack([state.pos, p])
    state.waypoint = np.vstack([state.waypoint, state.rng.uniform(0.0, 1.0, 2) * np.array([w, h])])
    state.speed = np.append(state.speed, state.rng.uniform(cfg.mobility.speed_min, cfg.mobility.speed_max))
    state.pause = np.append(state.pause, 0)
    state.radio = np.append(state.radio, np.int8(Radio.SHORT))
    state.status = np.append(state.status, np.int8(Status.ACTIVE))
    state.cluster = np.append(state.cluster, NO_CLUSTER)
    state.energy = np.append(state.energy, 0.0)
    state.rings.append(KeyRing(base_key=base))

    target = None
    if state.clusters:
        ids, means = _means(state)
        d2 = np.sum((means - p) ** 2, axis=1)
        j = int(np.argmin(d2))
        if d2[j] <= cfg.short_range ** 2:
            target = ids[j]

    if target is not None:
        refresh_on_transfer(state, node, state.clusters[target])
        return [state.emit(EventKind.ADDED, node, None, target)]

    cid = state.new_cluster_id()
    state.clusters[cid] = Cluster(cid, p.copy(), node, {node}, state.epoch)
    state.cluster[node] = cid
    state.radio[node] = Radio.LONG
    state.rings[node].epoch = state.epoch
    install_head_keys(state)
    return [state.emit(EventKind.ADDED, node, None, cid),
            state.emit(EventKind.SINGLETON_FORMED, node, None, cid)]


def _remove_many(state: NetworkState, nodes: Iterable[int], reason: Status) -> list[ChurnEvent]:
    kind = EventKind.COMPROMISED if reason == Status.COMPROMISED else EventKind.REMOVED
    nodes = list(nodes)
    for node in nodes:
        if state.status[node] != Status.ACTIVE:
            raise ValueError(f"node {node} is already {Status(int(state.status[node])).name}")
    if len(set(nodes)) != len(nodes):
        raise ValueError("duplicate node in removal batch")
    touched: set[int] = set()
    events = []
    for node in nodes:
        before = int(state.cluster[node])
        state.clear_ring(node)
        vacate_cluster(state, node)
        state.status[node] = reason
        state.radio[node] = Radio.SHORT
        if before != NO_CLUSTER:
            touched.add(before)
        events.append(state.emit(kind, node, None if before == NO_CLUSTER else before, None))

    p = state.config.p_target
    for cid in sorted(touched):
        c = state.clusters.get(cid)
        if c is None:
            continue
        state.epoch += 1
        c.epoch = state.epoch
        distribute_cluster_keys(state, c, share_count_for(p, c.size))
    install_head_keys(state)
    return events


def remove_node(state: NetworkState, node: int, reason: Status = Status.DEAD) -> list[ChurnEvent]:
    """Delete a node; its former cluster gets a completely fresh key set and,
    if the node was head, the member nearest the cluster mean takes over."""
    if reason not in (Status.DEAD, Status.COMPROMISED):
        raise ValueError("reason must be DEAD or COMPROMISED")
    if not 0 <= node < state.n_nodes:
        raise KeyError(node)
    return _remove_many(state, [node], reason)


def compromise_fraction(state: NetworkState, fraction: float,
                        rng: np.random.Generator | None = None) -> list[ChurnEvent]:
    """Compromise ``floor(fraction * active)`` uniformly chosen active nodes.

    Above 70% the network is flagged as compromised; the state stays usable.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    rng = state.rng if rng is None else rng
    active = state.active_ids()
    count = math.floor(fraction * len(active) + 1e-9)
    if fraction > COMPROMISE_THRESHOLD:
        state.network_compromised = True
    if count == 0:
        return []
    victims = np.sort(rng.choice(active, size=count, replace=False))
    return _remove_many(state, victims.tolist(), Status.COMPROMISED)


def recluster(state: NetworkState) -> list[ChurnEvent]:
    """Re-run clustering over the current positions, rekey everything and
    report each newly elected head."""
    old_heads = set(state.heads())
    old_cluster = state.cluster.copy()
    active = len(state.active_ids())
    if active == 0:
        return []
    k = min(math.ceil(active / state.config.target_cluster_size), active)
    build_clusters(state, k)
    key_all_clusters(state)
    state.reclusters += 1
    events = []
    for cid in sorted(state.clusters):
        h = state.clusters[cid].head
        if h not in old_heads:
            before = int(old_cluster[h])
            events.append(state.emit(EventKind.HEAD_ROTATED, h,
                                     None if before == NO_CLUSTER else before, cid))
    return events


def initial_clustering(state: NetworkState) -> NetworkState:
    build_clusters(state, state.config.cluster_count)
    key_all_clusters(state)
    return state


def advance(state: NetworkState, steps: int = 1) -> list[ChurnEvent]:
    """Run ``steps`` scheduler ticks: move, transfer, and re-cluster every
    ``recluster_interval`` steps."""
    events = []
    interval = state.config.recluster_interval
    for _ in range(steps):
        mobility_step(state)
        events += detect_transfers(state)
        if state.step % interval == 0:
            events += recluster(state)
    return events

