"""Repeated-run experiments: hop counts vs. key probability and
reachability vs. compromised fraction, with CSV/JSON/SVG output."""
from __future__ import annotations

import csv
import dataclasses
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import advance, compromise_fraction, initial_clustering
from .keying import head_key_count
from .model import NetworkState, SimConfig, derive_rep_seed, init_state
from .routing import deliver

log = logging.getLogger(__name__)

# Values quoted alongside measurements in run reports.
REFERENCE_UNREACHABLE = {0.2: 0.02, 0.7: 0.056}
REFERENCE_SHARE_COUNT = {0.2: 8, 0.9: 37}
REFERENCE_HEAD_KEYS = (3, 10)


@dataclass(frozen=True, order=True)
class SweepPoint:
    p_target: float
    compromise: float

    @property
    def key(self) -> str:
        return f"p={self.p_target:g},f={self.compromise:g}"


@dataclass(frozen=True)
class ScenarioSpec:
    config: SimConfig
    p_targets: tuple[float, ...] = ()
    compromise_fractions: tuple[float, ...] = ()
    traffic: int = 1000
    label: str = "scenario"

    def __post_init__(self):
        if self.traffic < 1:
            raise ValueError("traffic must be >= 1")
        for p in self.p_targets:
            if not 0.0 < p < 1.0:
                raise ValueError(f"p_target {p} outside (0, 1)")
        for f in self.compromise_fractions:
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"compromise fraction {f} outside [0, 1]")

    def points(self) -> list[SweepPoint]:
        ps = self.p_targets or (self.config.p_target,)
        fs = self.compromise_fractions or self.config.compromise_fractions
        return [SweepPoint(float(p), float(f)) for p, f in itertools.product(ps, fs)]


@dataclass
class MetricsRow:
    label: str
    rep: int
    p_target: float
    s_mean: float
    compromise_fraction: float
    delivered: int
    unreachable: int
    mean_hops: float
    mean_keys_per_node: float
    mean_head_keys: float
    max_energy: float
    mean_energy: float
    network_compromised: bool

    @property
    def traffic(self) -> int:
        return self.delivered + self.unreachable

    @property
    def point(self) -> SweepPoint:
        return SweepPoint(self.p_target, self.compromise_fraction)


CSV_HEADER = [f.name for f in dataclasses.fields(MetricsRow)]


def prepare_repetition(config: SimConfig, p_target: float, rep_index: int) -> NetworkState:
    """Deploy, cluster, key and run the mobility schedule for one repetition."""
    cfg = config.replace(p_target=p_target, seed=derive_rep_seed(config.seed, rep_index))
    state = init_state(cfg)
    initial_clustering(state)
    advance(state, cfg.total_steps)
    return state


def measure(state: NetworkState, spec: ScenarioSpec, point: SweepPoint, rep_index: int) -> MetricsRow:
    """Compromise the requested fraction, then route ``spec.traffic`` random
    queries between distinct active nodes.  Mutates ``state``."""
    compromise_fraction(state, point.compromise)
    rng = state.rng
    active = state.active_ids()
    delivered = unreachable = 0
    total_hops = 0
    if len(active) < 2:
        unreachable = spec.traffic
    else:
        a = rng.integers(len(active), size=spec.traffic)
        b = rng.integers(len(active) - 1, size=spec.traffic)
        b = b + (b >= a)
        pos = state.pos.tolist()
        for i, j in zip(active[a].tolist(), active[b].tolist()):
            r = deliver(i, j, state, pos)
            if r.delivered:
                delivered += 1
                total_hops += r.hops
            else:
                unreachable += 1

    sizes = [c.share_count for c in state.clusters.values() if c.size >= 2]
    heads = state.heads()
    ring_sizes = [len(state.rings[i]) for i in active]
    return MetricsRow(
        label=spec.label,
        rep=rep_index,
        p_target=point.p_target,
        s_mean=float(np.mean(sizes)) if sizes else math.nan,
        compromise_fraction=point.compromise,
        delivered=delivered,
        unreachable=unreachable,
        mean_hops=total_hops / delivered if delivered else math.nan,
        mean_keys_per_node=float(np.mean(ring_sizes)) if ring_sizes else math.nan,
        mean_head_keys=float(np.mean([head_key_count(state, h) for h in heads])) if heads else math.nan,
        max_energy=float(state.energy.max()) if len(state.energy) else 0.0,
        mean_energy=float(state.energy.mean()) if len(state.energy) else 0.0,
        network_compromised=state.network_compromised,
    )


def run_repetition(spec: ScenarioSpec, point: SweepPoint, rep_index: int) -> MetricsRow:
    state = prepare_repetition(spec.config, point.p_target, rep_index)
    return measure(state, spec, point, rep_index)


def _run_rep_all_points(spec: ScenarioSpec, rep_index: int,
                        keep_events: bool) -> tuple[list[MetricsRow], list[str]]:
    # one prepared state per p_target, copied for every compromise fraction;
    # identical to calling run_repetition per point
    rows, lines = [], []
    points = spec.points()
    for p in sorted({pt.p_target for pt in points}):
        base = prepare_repetition(spec.config, p, rep_index)
        if keep_events:
            lines += [f"{rep_index} {p:g} - {e.to_line()}" for e in base.events]
        for pt in (q for q in points if q.p_target == p):
            state = base.copy()
            n_before = len(state.events)
            rows.append(measure(state, spec, pt, rep_index))
            if keep_events:
                lines += [f"{rep_index} {p:g} {pt.compromise:g} {e.to_line()}"
                          for e in state.events[n_before:]]
    return rows, lines


def _row_order(points: Sequence[SweepPoint]):
    index = {pt: i for i, pt in enumerate(points)}
    return lambda r: (index[r.point], r.rep)


def run_scenario(spec: ScenarioSpec, out_dir: str | Path | None = None, *,
                 svg: bool = False, events: bool = False,
                 workers: int = 1) -> tuple[list[MetricsRow], dict]:
    """Run every repetition at every sweep point.

    Returns the rows (ordered by sweep point, then repetition) and the
    per-point summary.  With ``out_dir`` the results are also written as
    ``metrics.csv`` and ``summary.json`` (plus SVG charts / an event log on
    request).
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out}: {exc}") from exc

    reps = range(spec.config.repetitions)
    rows: list[MetricsRow] = []
    lines: list[str] = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_rep_all_points, itertools.repeat(spec), reps,
                                    itertools.repeat(events)))
    else:
        results = (_run_rep_all_points(spec, r, events) for r in reps)
    for r_rows, r_lines in results:
        rows += r_rows
        lines += r_lines
    rows.sort(key=_row_order(spec.points()))
    summary = aggregate(rows, spec.points())

    if out is not None:
        emit_csv(rows, out / "metrics.csv")
        emit_summary(summary, out / "summary.json")
        if events:
            (out / "events.log").write_text("".join(line + "\n" for line in lines))
        if svg:
            emit_svg(hops_series(summary), out / "hops.svg",
                     xlabel="p_target (%)", ylabel="mean hops (delivered)")
            emit_svg(unreachable_series(summary), out / "unreachable.svg",
                     xlabel="compromised nodes (%)", ylabel="unreachable queries (%)")
    return rows, summary


# -- aggregation ---------------------------------------------------------------

def unreachable_fraction(rows: Iterable[MetricsRow]) -> float:
    rows = list(rows)
    if not rows:
        raise ValueError("no rows")
    total = sum(r.traffic for r in rows)
    return sum(r.unreachable for r in rows) / total


def pooled_hops(rows: Iterable[MetricsRow]) -> float:
    """Mean hop count over every delivered query at a sweep point."""
    rows = [r for r in rows if r.delivered]
    n = sum(r.delivered for r in rows)
    return math.fsum(r.mean_hops * r.delivered for r in rows) / n if n else math.nan


def _mean_std(values: list[float]) -> dict[str, float | None]:
    vals = sorted(v for v in values if not math.isnan(v))
    if not vals:
        return {"mean": None, "std": None}
    mean = math.fsum(vals) / len(vals)
    var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1) if len(vals) > 1 else 0.0
    return {"mean": mean, "std": math.sqrt(var)}


def aggregate(rows: Iterable[MetricsRow], points: Sequence[SweepPoint] | None = None) -> dict:
    """Per-point statistics; independent of row order."""
    by_point: dict[SweepPoint, list[MetricsRow]] = {}
    for r in rows:
        by_point.setdefault(r.point, []).append(r)
    order = points if points is not None else sorted(by_point)
    summary = {}
    for pt in order:
        group = sorted(by_point.get(pt, []), key=lambda r: r.rep)
        if not group:
            continue
        hops = pooled_hops(group)
        summary[pt.key] = {
            "p_target": pt.p_target,
            "compromise_fraction": pt.compromise,
            "repetitions": len(group),
            "delivered": sum(r.delivered for r in group),
            "unreachable": sum(r.unreachable for r in group),
            "unreachable_fraction": unreachable_fraction(group),
            "pooled_mean_hops": None if math.isnan(hops) else hops,
            "mean_hops": _mean_std([r.mean_hops for r in group]),
            "s_mean": _mean_std([r.s_mean for r in group]),
            "mean_keys_per_node": _mean_std([r.mean_keys_per_node for r in group]),
            "mean_head_keys": _mean_std([r.mean_head_keys for r in group]),
            "max_energy": _mean_std([r.max_energy for r in group]),
            "mean_energy": _mean_std([r.mean_energy for r in group]),
            "network_compromised": any(r.network_compromised for r in group),
        }
    return summary


def hops_series(summary: dict) -> dict[str, tuple[list[float], list[float]]]:
    series: dict[str, tuple[list[float], list[float]]] = {}
    for entry in summary.values():
        if entry["pooled_mean_hops"] is None:
            continue
        xs, ys = series.setdefault(f"compromised {100 * entry['compromise_fraction']:g}%", ([], []))
        xs.append(100 * entry["p_target"])
        ys.append(entry["pooled_mean_hops"])
    return series


def unreachable_series(summary: dict) -> dict[str, tuple[list[float], list[float]]]:
    series: dict[str, tuple[list[float], list[float]]] = {}
    for entry in summary.values():
        xs, ys = series.setdefault(f"p_target {100 * entry['p_target']:g}%", ([], []))
        xs.append(100 * entry["compromise_fraction"])
        ys.append(100 * entry["unreachable_fraction"])
    return series


# -- output ----------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows: Iterable[MetricsRow], path: str | Path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in rows:
                writer.writerow([_fmt(getattr(r, name)) for name in CSV_HEADER])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path: str | Path) -> list[MetricsRow]:
    types = {f.name: f.type for f in dataclasses.fields(MetricsRow)}
    conv = {"str": str, "int": int, "float": float, "bool": lambda s: s == "1"}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [MetricsRow(**{k: conv[types[k]](v) for k, v in rec.items()}) for rec in reader]


def emit_summary(summary: dict, path: str | Path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(summary, indent=2, sort_keys=True, allow_nan=False) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_svg(series: dict[str, tuple[Sequence[float], Sequence[float]]], path: str | Path,
             xlabel: str = "", ylabel: str = "", title: str = "") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, (xs, ys) in series.items():
        ax.plot(xs, ys, marker="o", label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    try:
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)


def comparison_report(summary: dict) -> list[str]:
    """Measured figures next to the reference values they are compared with."""
    lines = []
    for entry in summary.values():
        f = entry["compromise_fraction"]
        if f in REFERENCE_UNREACHABLE:
            lines.append(f"unreachable at {100 * f:g}% compromised: measured "
                         f"{100 * entry['unreachable_fraction']:.2f}%, reference "
                         f"{100 * REFERENCE_UNREACHABLE[f]:.1f}%")
        p = entry["p_target"]
        if f == 0 and p in REFERENCE_SHARE_COUNT and entry["s_mean"]["mean"] is not None:
            lines.append(f"share count at p={p:g}: measured {entry['s_mean']['mean']:.2f}, "
                         f"reference {REFERENCE_SHARE_COUNT[p]}")
    return lines
