"""Key-constrained greedy forwarding.

Inside a cluster a message hops only along shared pairwise keys.  At each
node it goes straight to the destination if the two share a key, otherwise
to the unvisited key-peer that is geographically closest to the
destination.  Between clusters it climbs to the source head, crosses the
head-to-head key graph with the same rule and descends to the destination.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import Cluster, NetworkState, NO_CLUSTER, Status


class Outcome(str, enum.Enum):
    DELIVERED = "Delivered"
    UNREACHABLE = "Unreachable"


@dataclass
class RouteResult:
    outcome: Outcome
    path: list[int]
    segments: tuple[int, int, int] = (0, 0, 0)
    long_hops: set[int] = field(default_factory=set)  # hop indices flown on long radio

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    @property
    def delivered(self) -> bool:
        return self.outcome is Outcome.DELIVERED


def greedy_path(src: int, dst: int, peers: Callable[[int], Iterable[int]],
                pos: Sequence[Sequence[float]]) -> tuple[bool, list[int]]:
    """Walk from ``src`` towards ``dst`` over the graph given by ``peers``.

    ``peers(u)`` yields the admissible next hops of ``u``.  Returns
    ``(delivered, path)``; the path is the partial walk on failure.
    """
    path = [src]
    if src == dst:
        return True, path
    visited = {src}
    tx, ty = pos[dst]
    cur = src
    while True:
        best, best_key = -1, None
        for q in peers(cur):
            if q == dst:
                path.append(dst)
                return True, path
            if q in visited:
                continue
            x, y = pos[q]
            key = ((x - tx) ** 2 + (y - ty) ** 2, q)  # ties -> lower id
            if best_key is None or key < best_key:
                best, best_key = q, key
        if best < 0:
            return False, path
        cur = best
        visited.add(cur)
        path.append(cur)


def _active_subset(state: NetworkState, ids: Iterable[int]) -> set[int]:
    arr = np.fromiter(ids, dtype=np.int64)
    return set(arr[state.status[arr] == Status.ACTIVE].tolist())


def _member_peers(state: NetworkState, cluster: Cluster) -> Callable[[int], list[int]]:
    allowed = _active_subset(state, cluster.members)
    rings = state.rings

    def peers(u: int) -> list[int]:
        return [q for q in rings[u].pairwise if q in allowed]
    return peers


def _head_peers(state: NetworkState) -> Callable[[int], list[int]]:
    allowed = _active_subset(state, state.heads())
    rings = state.rings

    def peers(u: int) -> list[int]:
        return [q for q in rings[u].pairwise if q in allowed]
    return peers


def _positions(state: NetworkState, pos):
    return state.pos.tolist() if pos is None else pos


def route_intra(cluster: Cluster, src: int, dst: int, state: NetworkState, pos=None) -> RouteResult:
    if src not in cluster.members or dst not in cluster.members:
        raise ValueError(f"nodes {src}, {dst} must both belong to cluster {cluster.id}")
    ok, path = greedy_path(src, dst, _member_peers(state, cluster), _positions(state, pos))
    outcome = Outcome.DELIVERED if ok else Outcome.UNREACHABLE
    return RouteResult(outcome, path, (len(path) - 1, 0, 0))


def route_inter(src: int, dst: int, state: NetworkState, pos=None) -> RouteResult:
    cs, cd = int(state.cluster[src]), int(state.cluster[dst])
    if cs == NO_CLUSTER or cd == NO_CLUSTER:
        raise ValueError("both endpoints must be clustered")
    a_cluster, b_cluster = state.clusters[cs], state.clusters[cd]
    hs, hd = a_cluster.head, b_cluster.head

    pos = _positions(state, pos)
    up = route_intra(a_cluster, src, hs, state, pos)
    if not up.delivered:
        return RouteResult(Outcome.UNREACHABLE, up.path, (up.hops, 0, 0))
    ok, across = greedy_path(hs, hd, _head_peers(state), pos)
    a, b = up.hops, len(across) - 1
    path = up.path + across[1:]
    long_hops = set(range(a, a + b))
    if not ok:
        return RouteResult(Outcome.UNREACHABLE, path, (a, b, 0), long_hops)
    down = route_intra(b_cluster, hd, dst, state, pos)
    path += down.path[1:]
    return RouteResult(down.outcome, path, (a, b, down.hops), long_hops)


def deliver(src: int, dst: int, state: NetworkState, pos=None) -> RouteResult:
    """Route a message and charge every transmitting node its radio cost."""
    for v in (src, dst):
        if not 0 <= v < state.n_nodes or state.status[v] != Status.ACTIVE:
            raise ValueError(f"node {v} is not active")
    # ``pos`` lets a caller routing many queries convert positions once
    pos = _positions(state, pos)
    if state.cluster[src] == state.cluster[dst]:
        result = route_intra(state.clusters[int(state.cluster[src])], src, dst, state, pos)
    else:
        result = route_inter(src, dst, state, pos)
    costs = state.config.energy_costs
    for i, sender in enumerate(result.path[:-1]):
        state.energy[sender] += costs.long_tx if i in result.long_hops else costs.short_tx
    return result

