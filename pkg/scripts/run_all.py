"""Run every config in scripts/configs through the CLI.

    python scripts/run_all.py [--out results] [--workers 4] [--only gradient]

Each config writes into ``OUT/<config stem>/``.  Exit status is the worst
exit code seen.
"""

import argparse
import sys
import time
from pathlib import Path

from fbm_bismut.cli import main as cli_main

HERE = Path(__file__).resolve().parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--only", default="", help="substring filter on config names")
    args = ap.parse_args(argv)
    worst = 0
    for cfg in sorted((HERE / "configs").glob("*.json")):
        if args.only not in cfg.stem:
            continue
        start = time.perf_counter()
        code = cli_main(["run", str(cfg), "--out", str(Path(args.out) / cfg.stem), "--workers", str(args.workers)])
        print(f"{cfg.stem:<22} exit {code}  {time.perf_counter() - start:6.1f} s")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
