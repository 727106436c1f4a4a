"""Domain types, configuration, seeding and the mutable network state.

All per-node quantities live in numpy arrays on :class:`NetworkState`
(position, waypoint, speed, radio, status, cluster, energy); :class:`Node`
is a thin view over one row.  Key rings are plain dicts keyed by peer id.
"""
from __future__ import annotations

import copy
import dataclasses
import enum
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

MASK64 = (1 << 64) - 1
NO_CLUSTER = -1


class ConfigError(ValueError):
    """Invalid :class:`SimConfig`; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field = field_name


class InvariantError(AssertionError):
    pass


class Radio(enum.IntEnum):
    SHORT = 0
    LONG = 1


class Status(enum.IntEnum):
    ACTIVE = 0
    COMPROMISED = 1
    DEAD = 2


class EventKind(str, enum.Enum):
    ADDED = "Added"
    REMOVED = "Removed"
    COMPROMISED = "Compromised"
    HEAD_ROTATED = "HeadRotated"
    TRANSFERRED = "Transferred"
    SINGLETON_FORMED = "SingletonFormed"


@dataclass(frozen=True)
class Mobility:
    speed_min: float = 0.5
    speed_max: float = 2.0
    pause_steps: int = 5


@dataclass(frozen=True)
class EnergyCosts:
    short_tx: float = 1.0
    long_tx: float = 5.0


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 2400
    area: tuple[float, float] = (1000.0, 1000.0)
    short_range: float = 550.0
    long_range_factor: float = 4.0
    target_cluster_size: int = 250
    p_target: float = 0.5
    recluster_interval: int = 50
    total_steps: int = 100
    repetitions: int = 30
    seed: int = 42
    compromise_fractions: tuple[float, ...] = (0.0,)
    mobility: Mobility = field(default_factory=Mobility)
    energy_costs: EnergyCosts = field(default_factory=EnergyCosts)

    @property
    def long_range(self) -> float:
        return self.short_range * self.long_range_factor

    @property
    def cluster_count(self) -> int:
        return math.ceil(self.node_count / self.target_cluster_size)

    def validate(self) -> SimConfig:
        if not 0.0 < self.p_target < 1.0:
            raise ConfigError("p_target", "p_target must lie strictly between 0 and 1")
        if self.target_cluster_size < 2:
            raise ConfigError("target_cluster_size", "target_cluster_size must be at least 2")
        if self.node_count < self.target_cluster_size:
            raise ConfigError("node_count", "node_count below target_cluster_size")
        if len(self.area) != 2 or min(self.area) <= 0:
            raise ConfigError("area", "area must be two positive extents")
        if self.short_range <= 0:
            raise ConfigError("short_range", "short_range must be positive")
        if self.long_range_factor < 1:
            raise ConfigError("long_range_factor", "long_range_factor must be >= 1")
        if self.recluster_interval < 1:
            raise ConfigError("recluster_interval", "recluster_interval must be >= 1")
        if self.total_steps < 0:
            raise ConfigError("total_steps", "total_steps must be >= 0")
        if self.repetitions < 1:
            raise ConfigError("repetitions", "repetitions must be >= 1")
        if any(not 0.0 <= f <= 1.0 for f in self.compromise_fractions):
            raise ConfigError("compromise_fractions", "compromise fractions must lie in [0, 1]")
        m = self.mobility
        if not 0 <= m.speed_min <= m.speed_max:
            raise ConfigError("mobility", "need 0 <= speed_min <= speed_max")
        if m.pause_steps < 0:
            raise ConfigError("mobility", "pause_steps must be >= 0")
        return self

    def replace(self, **changes: Any) -> SimConfig:
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> SimConfig:
        """Build a config from a flat (or one-level nested) mapping.

        Nested groups may be given either as tables (``[mobility]``) or as
        dotted flat keys (``"mobility.speed_min"``).
        """
        flat: dict[str, Any] = {}
        for key, value in data.items():
            if isinstance(value, dict):
                for sub, v in value.items():
                    flat[f"{key}.{sub}"] = v
            else:
                flat[key] = value

        kwargs: dict[str, Any] = {}
        groups: dict[str, dict[str, Any]] = {"mobility": {}, "energy_costs": {}}
        known = {f.name for f in dataclasses.fields(cls)}
        for key, value in flat.items():
            head, _, sub = key.partition(".")
            if sub and head in groups:
                groups[head][sub] = value
            elif key in known and key not in groups:
                kwargs[key] = value
            else:
                raise ConfigError(key, f"unknown config key {key!r}")
        if "area" in kwargs:
            kwargs["area"] = tuple(float(a) for a in kwargs["area"])
        if "compromise_fractions" in kwargs:
            kwargs["compromise_fractions"] = tuple(float(f) for f in kwargs["compromise_fractions"])
        try:
            if groups["mobility"]:
                kwargs["mobility"] = Mobility(**groups["mobility"])
            if groups["energy_costs"]:
                kwargs["energy_costs"] = EnergyCosts(**groups["energy_costs"])
        except TypeError as exc:
            raise ConfigError("mobility/energy_costs", str(exc)) from None
        return cls(**kwargs).validate()

    @classmethod
    def from_file(cls, path: str | Path) -> SimConfig:
        """Read a TOML config file whose keys mirror the field names."""
        with open(path, "rb") as fh:
            return cls.from_mapping(tomllib.load(fh))


def derive_rep_seed(seed: int, rep_index: int) -> int:
    """Seed for repetition ``rep_index``: splitmix64 finalizer applied to
    ``seed + (rep_index + 1) * golden_gamma`` (mod 2**64).

    Both steps are bijections on 64-bit words, so for a fixed ``seed`` distinct
    repetition indices always map to distinct seeds.
    """
    z = (seed + (rep_index + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass
class KeyRing:
    base_key: int
    pairwise: dict[int, int] = field(default_factory=dict)
    epoch: int = 0

    def __len__(self) -> int:
        return len(self.pairwise)

    def __contains__(self, peer: int) -> bool:
        return peer in self.pairwise


@dataclass
class Cluster:
    id: int
    mean: np.ndarray
    head: int
    members: set[int]
    epoch: int = 0
    share_count: int = 0

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ChurnEvent:
    seq: int
    step: int
    kind: EventKind
    node: int
    cluster_before: int | None
    cluster_after: int | None

    def to_line(self) -> str:
        before = "-" if self.cluster_before is None else str(self.cluster_before)
        after = "-" if self.cluster_after is None else str(self.cluster_after)
        return f"{self.step} {self.kind.value} {self.node} {before} {after}"


class Node:
    """Read/write view of one node's row in a :class:`NetworkState`."""

    __slots__ = ("_state", "id")

    def __init__(self, state: NetworkState, node_id: int):
        self._state = state
        self.id = node_id

    @property
    def pos(self) -> np.ndarray:
        return self._state.pos[self.id]

    @property
    def waypoint(self) -> np.ndarray:
        return self._state.waypoint[self.id]

    @property
    def speed(self) -> float:
        return float(self._state.speed[self.id])

    @property
    def radio(self) -> Radio:
        return Radio(int(self._state.radio[self.id]))

    @property
    def status(self) -> Status:
        return Status(int(self._state.status[self.id]))

    @property
    def cluster(self) -> int | None:
        c = int(self._state.cluster[self.id])
        return None if c == NO_CLUSTER else c

    @property
    def energy_used(self) -> float:
        return float(self._state.energy[self.id])

    @property
    def key_ring(self) -> KeyRing:
        return self._state.rings[self.id]

    def __repr__(self) -> str:
        x, y = self.pos
        return f"Node({self.id}, pos=({x:.1f}, {y:.1f}), {self.status.name}, cluster={self.cluster})"


class NetworkState:
    """Everything a simulation repetition knows.  Single owner, never shared."""

    def __init__(self, config: SimConfig, rng: np.random.Generator, seed: int):
        self.config = config
        self.seed = seed
        self.rng = rng
        n = config.node_count
        self.pos = np.zeros((n, 2))
        self.waypoint = np.zeros((n, 2))
        self.speed = np.zeros(n)
        self.pause = np.zeros(n, dtype=np.int64)
        self.radio = np.full(n, Radio.SHORT, dtype=np.int8)
        self.status = np.full(n, Status.ACTIVE, dtype=np.int8)
        self.cluster = np.full(n, NO_CLUSTER, dtype=np.int64)
        self.energy = np.zeros(n)
        self.rings: list[KeyRing] = []
        self.clusters: dict[int, Cluster] = {}
        self.step = 0
        self.epoch = 0
        self.reclusters = 0
        self.next_cluster_id = 0
        self.network_compromised = False
        self.events: list[ChurnEvent] = []

    # -- nodes -------------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.rings)

    def node(self, node_id: int) -> Node:
        if not 0 <= node_id < self.n_nodes:
            raise KeyError(node_id)
        return Node(self, node_id)

    @property
    def nodes(self) -> list[Node]:
        return [Node(self, i) for i in range(self.n_nodes)]

    def is_active(self, node_id: int) -> bool:
        return self.status[node_id] == Status.ACTIVE

    def active_ids(self) -> np.ndarray:
        return np.flatnonzero(self.status == Status.ACTIVE)

    def is_head(self, node_id: int) -> bool:
        c = self.cluster[node_id]
        return c != NO_CLUSTER and self.clusters[int(c)].head == node_id

    def heads(self) -> list[int]:
        return [c.head for c in self.clusters.values()]

    def new_cluster_id(self) -> int:
        cid = self.next_cluster_id
        self.next_cluster_id += 1
        return cid

    def draw_key_ids(self, count: int) -> list[int]:
        """Fresh opaque 64-bit key identifiers."""
        if count == 0:
            return []
        return self.rng.integers(0, 2**64, size=count, dtype=np.uint64, endpoint=False).tolist()

    # -- key ring primitives (always symmetric) ------------------------------
    def link(self, p: int, q: int, key: int) -> None:
        self.rings[p].pairwise[q] = key
        self.rings[q].pairwise[p] = key

    def unlink(self, p: int, q: int) -> None:
        self.rings[p].pairwise.pop(q, None)
        self.rings[q].pairwise.pop(p, None)

    def clear_ring(self, node_id: int) -> None:
        ring = self.rings[node_id]
        for peer in ring.pairwise:
            self.rings[peer].pairwise.pop(node_id, None)
        ring.pairwise.clear()

    # -- events --------------------------------------------------------------
    def emit(self, kind: EventKind, node: int, before: int | None, after: int | None) -> ChurnEvent:
        ev = ChurnEvent(len(self.events), self.step, kind, int(node), before, after)
        self.events.append(ev)
        return ev

    def copy(self) -> NetworkState:
        return copy.deepcopy(self)

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes)


def init_state(config: SimConfig) -> NetworkState:
    """Deploy ``config.node_count`` active nodes uniformly over the area."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    state = NetworkState(config, rng, config.seed)
    n = config.node_count
    w, h = config.area
    extent = np.array([w, h])
    state.pos = rng.uniform(0.0, 1.0, size=(n, 2)) * extent
    state.waypoint = rng.uniform(0.0, 1.0, size=(n, 2)) * extent
    m = config.mobility
    state.speed = rng.uniform(m.speed_min, m.speed_max, size=n)

    base: list[int] = []
    seen: set[int] = set()
    while len(base) < n:
        for key in state.draw_key_ids(n - len(base)):
            if key not in seen:
                seen.add(key)
                base.append(key)
    state.rings = [KeyRing(base_key=k) for k in base]
    return state


def check_invariants(state: NetworkState) -> None:
    """Full scan of the structural invariants; raises :class:`InvariantError`."""
    problems: list[str] = []
    active = set(state.active_ids().tolist())
    heads = set(state.heads())

    covered: dict[int, int] = {}
    for cid, c in state.clusters.items():
        if c.head not in c.members:
            problems.append(f"cluster {cid}: head {c.head} not a member")
        for m in c.members:
            if m in covered:
                problems.append(f"node {m} in clusters {covered[m]} and {cid}")
            covered[m] = cid
            if state.cluster[m] != cid:
                problems.append(f"node {m} records cluster {state.cluster[m]}, listed in {cid}")
    if state.clusters and set(covered) != active:
        problems.append(f"partition mismatch: {len(covered)} clustered vs {len(active)} active")

    for p, ring in enumerate(state.rings):
        if p not in active:
            if ring.pairwise:
                problems.append(f"inactive node {p} still holds keys")
            if state.radio[p] != Radio.SHORT:
                problems.append(f"inactive node {p} has long radio on")
            continue
        want_long = p in heads
        if bool(state.radio[p] == Radio.LONG) != want_long:
            problems.append(f"node {p}: radio {Radio(int(state.radio[p])).name}, head={want_long}")
        cid = int(state.cluster[p])
        if cid != NO_CLUSTER and ring.epoch != state.clusters[cid].epoch:
            problems.append(f"node {p}: ring epoch {ring.epoch} != cluster epoch {state.clusters[cid].epoch}")
        for q, key in ring.pairwise.items():
            if q not in active:
                problems.append(f"node {p} holds key for inactive {q}")
            if state.rings[q].pairwise.get(p) != key:
                problems.append(f"asymmetric key {p}->{q}")
            if state.cluster[q] != state.cluster[p] and not (p in heads and q in heads):
                problems.append(f"cross-cluster key {p}-{q} between non-heads")
    if problems:
        shown = "; ".join(problems[:10])
        raise InvariantError(f"{len(problems)} invariant violation(s): {shown}")
