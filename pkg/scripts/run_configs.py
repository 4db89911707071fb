"""
Run every config in a directory through the command line front end.

Each config writes its output into ``--out-dir`` under the name given by
``output.path``; the exit code of every run is printed and the script
exits with the worst one.

    python3 scripts/run_configs.py configs --out-dir results
"""

import argparse
import json
import os
import sys
from pathlib import Path

from steadyvirial import cli


def run_one(path: Path, out_dir: Path) -> int:
    doc = json.loads(path.read_text())
    verb = "scan" if doc.get("scan") else "build"
    name = (doc.get("output") or {}).get("path") or f"{path.stem}.out"
    return cli.main([verb, "--config", str(path), "--out", str(out_dir / name)])


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    p.add_argument("config_dir", type=Path)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--workers", type=int, help="scan worker processes")
    args = p.parse_args(argv)
    if args.workers:
        os.environ["STEADYVIRIAL_WORKERS"] = str(args.workers)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for path in sorted(args.config_dir.glob("*.json")):
        code = run_one(path, args.out_dir)
        print(f"{code}  {path.name}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
