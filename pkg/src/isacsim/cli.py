"""Command-line entry points.

Subcommands:
  run        simulate a scenario config and write artifacts to a directory
  validate   lint a config file without running anything
  mc-outage  post-hoc Monte-Carlo outage certificate over a saved run

Exit codes: 0 success, 1 config error, 2 every slot infeasible, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .arrays import ChannelEstimate
from .chanceopt import AoState, validate_outage_mc
from .config import load_config
from .errors import ConfigError
from .harness import run_simulation, write_outputs
from .rates import BeamformerSet, SemanticProfile

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3


def _apply_overrides(config, args):
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.filter is not None:
        updates["filter_kind"] = args.filter
    if args.no_semantic:
        updates["semantic_enabled"] = False
    if args.perfect_csi:
        updates["perfect_csi"] = True
    if args.mc_samples is not None:
        updates["mc_samples"] = args.mc_samples
    return dataclasses.replace(config, **updates) if updates else config


def cmd_run(args) -> int:
    try:
        config = _apply_overrides(load_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    artifacts = run_simulation(config)
    try:
        written = write_outputs(artifacts.records, config, args.out,
                                beams_log=artifacts.beams_log, summary=artifacts.summary)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(artifacts.records)} slot records to {written.out_dir}")
    for key in sorted(artifacts.summary):
        print(f"  {key}: {artifacts.summary[key]}")
    if artifacts.records and not any(r.feasible for r in artifacts.records):
        print("every slot was infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.config}: valid ({len(config.vehicles)} vehicles, "
          f"{config.n_slots} slots, filter={config.filter_kind})")
    return EXIT_OK


def cmd_mc_outage(args) -> int:
    run_dir = Path(args.run_dir)
    try:
        config = load_config(run_dir / "config.yaml")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    beams_path = run_dir / "beams.npz"
    if not beams_path.exists():
        print(f"i/o error: {beams_path} not found (was the run saved with beams?)", file=sys.stderr)
        return EXIT_IO
    data = np.load(beams_path)
    n_slots = data["w"].shape[0]
    rng = np.random.default_rng(args.seed)
    worst_int, worst_eav, checked = 0.0, 0.0, 0
    rows = []
    for s in range(n_slots):
        if not bool(data["feasible"][s]):
            continue
        estimates = [ChannelEstimate(h_bar=data["h_bar"][s, i], omega=data["omega"][s, i])
                     for i in range(data["h_bar"].shape[1])]
        beams = BeamformerSet(w=list(data["w"][s]), r=list(data["r"][s]))
        targets = AoState(lam=float(data["lam"][s]), varrho=float(data["varrho"][s]),
                          rho=data["rho"][s])
        profile = SemanticProfile(iota=config.iota, rho=data["rho"][s])
        report = validate_outage_mc(beams, estimates, config.intended, config.unintended,
                                    targets, profile, config.sigma_c2, args.mc_samples, rng)
        worst_int = max(worst_int, max(e.rate for e in report.intended))
        worst_eav = max([worst_eav] + [e.rate for e in report.eaves])
        checked += 1
        rows.append({
            "slot": int(data["slot"][s]),
            "intended_violation": [e.rate for e in report.intended],
            "eaves_violation": [e.rate for e in report.eaves],
            "intended_upper": [e.wilson_upper for e in report.intended],
            "eaves_upper": [e.wilson_upper for e in report.eaves],
        })
    out_path = run_dir / "mc_outage.json"
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump({"samples_per_slot": args.mc_samples, "slots_checked": checked,
                       "worst_intended_violation": worst_int,
                       "worst_eaves_violation": worst_eav, "per_slot": rows}, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"checked {checked} feasible slots with {args.mc_samples} draws each")
    print(f"worst intended-rate violation:     {worst_int:.4g}")
    print(f"worst eavesdropper-rate violation: {worst_eav:.4g}")
    print(f"wrote {out_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isacsim",
                                     description="Vehicular sensing and secure semantic "
                                                 "communication simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate a scenario and write artifacts")
    run_p.add_argument("--config", required=True, help="scenario YAML path")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--filter", choices=("ekf", "pf", "none"), default=None)
    run_p.add_argument("--no-semantic", action="store_true",
                       help="disable semantic extraction (rho forced to 1)")
    run_p.add_argument("--perfect-csi", action="store_true",
                       help="benchmark mode: true channels, zero CSI error")
    run_p.add_argument("--mc-samples", type=int, default=None,
                       help="per-slot Monte-Carlo outage draws (0 disables)")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="validate a scenario config")
    val_p.add_argument("--config", required=True)
    val_p.set_defaults(func=cmd_validate)

    mc_p = sub.add_parser("mc-outage", help="Monte-Carlo outage certificate for a saved run")
    mc_p.add_argument("--run-dir", required=True, help="directory written by `run`")
    mc_p.add_argument("--mc-samples", type=int, default=10000)
    mc_p.add_argument("--seed", type=int, default=0)
    mc_p.set_defaults(func=cmd_mc_outage)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
