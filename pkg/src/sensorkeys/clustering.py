"""k-means++ seeding, Lloyd refinement and cluster/head construction."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .model import Cluster, NetworkState, NO_CLUSTER, Radio

log = logging.getLogger(__name__)

MAX_ESCALATIONS = 3


@dataclass
class ClusteringResult:
    centers: np.ndarray
    assignment: np.ndarray
    wcss: float
    iterations: int
    history: list[float] = field(default_factory=list)


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def seed_centers(points, k: int, rng: np.random.Generator, first: int | None = None) -> np.ndarray:
    """k-means++ seeding.

    The first center is drawn uniformly (or forced via ``first``); every
    further center is drawn with probability proportional to the squared
    distance to the nearest center chosen so far.  Returns a ``(k, 2)`` array
    of input points at distinct indices.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("points must be a non-empty (n, 2) array")
    n = len(pts)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")

    idx = int(rng.integers(n)) if first is None else int(first)
    chosen = [idx]
    d2 = np.sum((pts - pts[idx]) ** 2, axis=1)
    d2[idx] = 0.0
    taken = np.zeros(n, dtype=bool)
    taken[idx] = True
    while len(chosen) < k:
        weights = np.where(taken, 0.0, d2)
        total = weights.sum()
        if total > 0:
            idx = int(rng.choice(n, p=weights / total))
        else:
            # only duplicates of chosen points remain
            idx = int(rng.choice(np.flatnonzero(~taken)))
        chosen.append(idx)
        taken[idx] = True
        d2 = np.minimum(d2, np.sum((pts - pts[idx]) ** 2, axis=1))
    return pts[chosen].copy()


def wcss(points, centers, assignment) -> float:
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    ctr = np.asarray(centers, dtype=float).reshape(len(centers), -1)
    a = np.asarray(assignment, dtype=np.int64)
    if len(a) != len(pts):
        raise ValueError("assignment must cover every point")
    if len(a) and (a.min() < 0 or a.max() >= len(ctr)):
        raise IndexError("assignment index out of range")
    return float(np.sum((pts - ctr[a]) ** 2))


def lloyd_refine(points, centers, max_iters: int = 100) -> ClusteringResult:
    """Alternate nearest-center binding and centroid update until the
    assignment stops changing or ``max_iters`` updates have run.

    ``history`` holds the objective after each binding step.  A center that
    loses all its points jumps to the point farthest from its current center.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        raise ValueError("points must be non-empty")
    ctr = np.array(centers, dtype=float)
    if len(ctr) == 0:
        raise ValueError("centers must be non-empty")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    k = len(ctr)

    history: list[float] = []
    assign = None
    iterations = 0
    for _ in range(max_iters):
        d2 = _sq_dists(pts, ctr)
        new_assign = np.argmin(d2, axis=1)
        nearest = d2[np.arange(len(pts)), new_assign]
        history.append(float(nearest.sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        iterations += 1
        counts = np.bincount(assign, minlength=k)
        sums = np.zeros_like(ctr)
        np.add.at(sums, assign, pts)
        filled = counts > 0
        ctr[filled] = sums[filled] / counts[filled, None]
        if not filled.all():
            spare = nearest.copy()
            for c in np.flatnonzero(~filled):
                j = int(np.argmax(spare))
                ctr[c] = pts[j]
                spare[j] = -1.0
    else:
        d2 = _sq_dists(pts, ctr)
        new_assign = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(pts)), new_assign].sum()))

    return ClusteringResult(ctr, new_assign, wcss(pts, ctr, new_assign), iterations, history)


def kmeans_pp(points, k: int, rng: np.random.Generator, max_iters: int = 100) -> ClusteringResult:
    return lloyd_refine(points, seed_centers(points, k, rng), max_iters)


def choose_head(state: NetworkState, members, mean) -> int:
    """Member nearest ``mean``; ties go to lower energy_used, then lower id."""
    ids = sorted(members)
    d = np.sum((state.pos[ids] - np.asarray(mean)) ** 2, axis=1)
    return min(zip(d.tolist(), state.energy[ids].tolist(), ids))[2]


def cluster_diameter(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(pdist(pts).max())


def build_clusters(state: NetworkState, k: int) -> NetworkState:
    """Partition active nodes into ``k`` clusters and elect heads.

    The clustering generator is re-created from the state's seed on every
    call, so identical positions always yield identical clusters.  If any
    cluster is wider than the short radio range, ``k`` is raised by one and
    clustering re-runs, at most ``MAX_ESCALATIONS`` times.  All pairwise keys
    are cleared; callers distribute fresh ones.
    """
    active = state.active_ids()
    if k < 1 or len(active) < k:
        raise ValueError(f"need at least k={k} active nodes, have {len(active)}")
    pts = state.pos[active]
    rng = np.random.default_rng([state.seed, 0x6B6D])

    for attempt in range(MAX_ESCALATIONS + 1):
        result = kmeans_pp(pts, k, rng)
        groups = [np.flatnonzero(result.assignment == c) for c in range(k)]
        widest = max(cluster_diameter(pts[g]) for g in groups)
        if widest <= state.config.short_range:
            break
        if attempt == MAX_ESCALATIONS or k >= len(active):
            log.warning("cluster diameter %.1f exceeds short range %.1f with k=%d; proceeding",
                        widest, state.config.short_range, k)
            break
        log.debug("diameter %.1f > %.1f at k=%d, escalating", widest, state.config.short_range, k)
        k += 1

    for ring in state.rings:
        ring.pairwise.clear()
    state.epoch += 1
    state.clusters = {}
    state.cluster[:] = NO_CLUSTER
    state.radio[:] = Radio.SHORT
    for c, g in enumerate(groups):
        if len(g) == 0:
            continue
        members = set(active[g].tolist())
        cid = state.new_cluster_id()
        mean = result.centers[c].copy()
        head = choose_head(state, members, mean)
        state.clusters[cid] = Cluster(cid, mean, head, members, state.epoch)
        state.cluster[list(members)] = cid
        state.radio[head] = Radio.LONG
    for i in active:
        state.rings[i].epoch = state.epoch
    return state
