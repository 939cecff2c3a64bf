"""Run every YAML config under scripts/configs and write results/<name>/."""

import argparse
from pathlib import Path

from nqa.cli import run_experiment
from nqa.config import load_config

HERE = Path(__file__).parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("names", nargs="*", help="config stems (default: all)")
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=None)
    a = ap.parse_args()
    for path in sorted((HERE / "configs").glob("*.yaml")):
        if a.names and path.stem not in a.names:
            continue
        cfg = load_config(path)
        for p in run_experiment(cfg, Path(a.out) / path.stem, workers=a.workers):
            print(p)


if __name__ == "__main__":
    main()
