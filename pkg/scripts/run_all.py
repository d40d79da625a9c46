#!/usr/bin/env python3
"""Run every example experiment config through the CLI.

Outputs land under runs/<kind>/ next to this script's parent directory
(or under --out-root).  A nonzero exit from any experiment stops the
sweep with that code, so this doubles as a smoke test:

    python3 scripts/run_all.py
    python3 scripts/run_all.py --seed 42 --plots
"""

import argparse
import sys
from pathlib import Path

from kolmlab.cli import main as kolmlab_main

CONFIGS = Path(__file__).parent / "configs"
JOBS = [
    ("propagate", "propagate.json"),
    ("decay-check", "decay_check.json"),
    ("thickness", "thickness.json"),
    ("spectral-fit", "spectral_fit.json"),
    ("interp-verify", "interp_verify.json"),
    ("telescope", "telescope.json"),
]


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-root", default="runs", help="output directory root")
    parser.add_argument("--seed", type=int, default=None, help="override every config seed")
    parser.add_argument("--plots", action="store_true", help="also write SVG plots")
    args = parser.parse_args(argv)

    for kind, name in JOBS:
        cli_args = [kind, "--config", str(CONFIGS / name),
                    "--out", str(Path(args.out_root) / kind)]
        if args.seed is not None:
            cli_args += ["--seed", str(args.seed)]
        if args.plots:
            cli_args.append("--plots")
        print(f"== {kind}")
        code = kolmlab_main(cli_args)
        if code != 0:
            print(f"{kind} exited with {code}", file=sys.stderr)
            return code
    print(f"all {len(JOBS)} experiments finished; artifacts under {args.out_root}/")
    return 0


if __name__ == "__main__":
    sys.exit(run())
