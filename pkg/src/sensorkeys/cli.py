"""``simulate`` command: run a scenario from a TOML config file."""
from __future__ import annotations

import argparse
import logging
import sys

from .harness import ScenarioSpec, comparison_report, run_scenario
from .model import ConfigError, SimConfig


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="simulate", description=__doc__)
    ap.add_argument("--config", required=True, help="TOML file with SimConfig fields")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--nodes", type=int, help="node_count override")
    ap.add_argument("--p-target", type=_floats, help="one value or a comma-separated sweep")
    ap.add_argument("--reps", type=int)
    ap.add_argument("--compromise", type=_floats, help="comma-separated compromise fractions")
    ap.add_argument("--steps", type=int, help="total_steps override")
    ap.add_argument("--traffic", type=int, default=1000, help="route queries per sweep point")
    ap.add_argument("--label", default="scenario")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="out")
    ap.add_argument("--svg", action="store_true")
    ap.add_argument("--events", action="store_true")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = SimConfig.from_file(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.nodes is not None:
            overrides["node_count"] = args.nodes
        if args.reps is not None:
            overrides["repetitions"] = args.reps
        if args.steps is not None:
            overrides["total_steps"] = args.steps
        if args.p_target:
            overrides["p_target"] = args.p_target[0]
        if args.compromise:
            overrides["compromise_fractions"] = args.compromise
        cfg = cfg.replace(**overrides).validate()
        spec = ScenarioSpec(cfg, p_targets=args.p_target or (), traffic=args.traffic, label=args.label)
        _, summary = run_scenario(spec, args.out, svg=args.svg, events=args.events,
                                  workers=args.workers)
    except ConfigError as exc:
        print(f"simulate: config error in {exc.field}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 1

    for key, entry in summary.items():
        hops = entry["pooled_mean_hops"]
        hops_txt = "n/a" if hops is None else f"{hops:.3f}"
        print(f"{key}: hops={hops_txt} unreachable={entry['unreachable_fraction']:.4f} "
              f"s={entry['s_mean']['mean']} head_keys={entry['mean_head_keys']['mean']}")
    for line in comparison_report(summary):
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
