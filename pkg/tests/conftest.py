from __future__ import annotations

import numpy as np
import pytest

from sensorkeys.model import Cluster, Radio, SimConfig, init_state


def make_state(points, groups=None, edges=(), **overrides):
    """Small hand-built state.

    ``groups`` is a list of member lists (first member is head, mean is the
    centroid); default is one cluster holding everything.  ``edges`` are
    pairs that get a shared key.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    cfg = dict(node_count=n, target_cluster_size=2, area=(1000.0, 1000.0),
               short_range=100.0, seed=1, total_steps=0)
    cfg.update(overrides)
    st = init_state(SimConfig(**cfg))
    st.pos[:] = pts
    st.epoch = 1
    if groups is None:
        groups = [list(range(n))]
    for members in groups:
        cid = st.new_cluster_id()
        mean = pts[members].mean(axis=0)
        st.clusters[cid] = Cluster(cid, mean, members[0], set(members), st.epoch)
        st.cluster[members] = cid
        st.radio[members[0]] = Radio.LONG
        for m in members:
            st.rings[m].epoch = st.epoch
    keys = iter(range(1, 10**6))
    for p, q in edges:
        st.link(p, q, next(keys))
    return st


def bfs_hops(src, dst, peers):
    """Shortest hop count on the graph given by ``peers``, or None."""
    if src == dst:
        return 0
    frontier, seen, depth = [src], {src}, 0
    while frontier:
        depth += 1
        nxt = []
        for u in frontier:
            for q in peers(u):
                if q == dst:
                    return depth
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    return None


@pytest.fixture
def small_config():
    return SimConfig(node_count=300, area=(400.0, 400.0), short_range=300.0,
                     target_cluster_size=60, p_target=0.5, recluster_interval=10,
                     total_steps=20, repetitions=2, seed=11)


# -- acceptance reporting ------------------------------------------------------

_VERDICTS: list[str] = []
_NOTES: list[str] = []


class Verdict:
    """Records one PASS/FAIL line for an acceptance criterion.

    Use as ``with verdict("3", "head keys") as v: ...``; ``v.detail`` is
    appended to the line and ``v.note(...)`` adds free text to the report.
    """

    def __init__(self, number: str, title: str):
        self.number, self.title, self.detail = number, title, ""

    def note(self, text: str) -> None:
        _NOTES.append(f"[criterion {self.number}] {text}")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        line = f"criterion {self.number} {status}: {self.title}"
        if self.detail:
            line += f" ({self.detail})"
        if exc_type is AssertionError and str(exc):
            line += f" :: {str(exc).splitlines()[0]}"
        _VERDICTS.append(line)
        print(line)
        return False


@pytest.fixture
def verdict():
    return Verdict


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_VERDICTS, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)
    for line in _NOTES:
        terminalreporter.write_line(line)
