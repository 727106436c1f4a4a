"""Reduced-size versions of the two headline experiments.

First, mean path length against the key-sharing target; then the share of
undeliverable messages as more of the network is captured.  Pass an output
directory to also get CSV, JSON and SVG files.
"""
import sys

from sensorkeys import ScenarioSpec, SimConfig, run_scenario
from sensorkeys.harness import comparison_report

out = sys.argv[1] if len(sys.argv) > 1 else None
cfg = SimConfig(repetitions=4)

_, by_p = run_scenario(ScenarioSpec(cfg, p_targets=(0.2, 0.4, 0.6, 0.8), traffic=300),
                       out and f"{out}/p_sweep", svg=bool(out))
for key, e in by_p.items():
    print(f"{key}: s={e['s_mean']['mean']:.1f}, hops={e['pooled_mean_hops']:.2f}")

_, by_f = run_scenario(ScenarioSpec(cfg, compromise_fractions=(0.0, 0.2, 0.4, 0.7), traffic=300),
                       out and f"{out}/compromise", svg=bool(out))
for key, e in by_f.items():
    print(f"{key}: unreachable={e['unreachable_fraction']:.4f}, hops={e['pooled_mean_hops']:.2f}")
for line in comparison_report(by_f):
    print(line)
