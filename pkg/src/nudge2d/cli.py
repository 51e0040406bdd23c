"""Command-line entry points: spinup, run, compare."""

from __future__ import annotations

import argparse
import sys

from .config import load_preset, parse_config, preset_names
from .harness import COMPARISON_PRESETS, run_comparison, run_experiment, run_spinup


def _load_config(args):
    if args.config:
        cfg = parse_config(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        raise SystemExit("one of --config or --preset is required")
    if args.seed is not None:
        strat = {**cfg.to_dict()["strategy"], "seed": args.seed}
        data = cfg.to_dict()
        data["strategy"] = strat
        from .config import config_from_dict

        cfg = config_from_dict(data)
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nudge2d",
        description="Nudging data assimilation on the periodic square "
                    "with static or moving observers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_spin = sub.add_parser("spinup", help="evolve the reference state and checkpoint it")
    p_spin.add_argument("--config", help="JSON run configuration")
    p_spin.add_argument("--preset", help=f"bundled preset ({', '.join(preset_names())})")
    p_spin.add_argument("--seed", type=int, default=None)
    p_spin.add_argument("--checkpoint", default=None, help="checkpoint output path")

    p_run = sub.add_parser("run", help="run one assimilation experiment")
    p_run.add_argument("--config", help="JSON run configuration")
    p_run.add_argument("--preset", help=f"bundled preset ({', '.join(preset_names())})")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--checkpoint", default=None, help="spin-up checkpoint to load")

    p_cmp = sub.add_parser("compare", help="run a strategy comparison battery")
    p_cmp.add_argument("--preset", required=True,
                       help=f"battery preset ({', '.join(COMPARISON_PRESETS)})")
    p_cmp.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p_cmp.add_argument("--seed", type=int, default=1069)
    p_cmp.add_argument("--out", default="runs/compare")
    p_cmp.add_argument("--checkpoint", default=None)
    p_cmp.add_argument("--t-run", type=float, default=None,
                       help="override the battery run length")

    args = parser.parse_args(argv)

    if args.command == "spinup":
        cfg = _load_config(args)
        result = run_spinup(cfg, checkpoint_path=args.checkpoint)
        final_t, final_e = result.energy_trace[-1]
        print(f"spin-up complete: t={final_t:g}, kinetic energy={final_e:.6g}")
        return 0

    if args.command == "run":
        cfg = _load_config(args)
        summary = run_experiment(cfg, checkpoint_override=args.checkpoint,
                                 output_dir_override=args.out)
        f = summary.final
        print(f"{summary.status}: t={f.t:g} err_psi_l2={f.err_psi_l2:.3e} "
              f"cpu={summary.cpu_seconds:.1f}s -> {summary.error_csv}")
        return 0

    if args.command == "compare":
        summaries = run_comparison(args.preset, args.scale, seed=args.seed,
                                   out_root=args.out, checkpoint_path=args.checkpoint,
                                   t_run=args.t_run)
        for s in summaries:
            print(f"{s.name:24s} {s.status:9s} observers={s.observer_count:6d} "
                  f"final={s.final.err_psi_l2:.3e} cpu={s.cpu_seconds:.1f}s")
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
