#!/usr/bin/env python3
"""Run every bundled config and report one pass/fail line each.

Exit status is 0 only if every config's in-record assertions pass, which
makes this script usable as a cheap end-to-end check:

    python scripts/run_all_configs.py [--configs DIR] [--out DIR]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from quadvar.config import load_config
from quadvar.runner import assertions_pass, emit, run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--configs",
        type=Path,
        default=Path(__file__).resolve().parent.parent / "configs",
        help="directory holding *.json configs",
    )
    parser.add_argument(
        "--out", type=Path, default=None, help="also write <name>.csv per config here"
    )
    args = parser.parse_args()

    paths = sorted(args.configs.glob("*.json"))
    if not paths:
        print(f"no configs found under {args.configs}", file=sys.stderr)
        return 2

    failures = 0
    for path in paths:
        start = time.perf_counter()
        cfg = load_config(path)
        records = run(cfg)
        elapsed = time.perf_counter() - start
        ok = assertions_pass(records)
        failures += 0 if ok else 1
        print(
            f"{path.name:32s} {cfg.experiment:16s} "
            f"{len(records):3d} record(s)  {elapsed:6.2f}s  {'pass' if ok else 'FAIL'}"
        )
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            emit(records, "csv", args.out / (path.stem + ".csv"))
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
