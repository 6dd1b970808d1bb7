"""Run every example config in scripts/configs through the CLI entry point.

    python3 scripts/run_configs.py [name ...]

Reports land in out/ relative to the working directory.
"""

import sys
import time
from pathlib import Path

from isingreco.cli import main

HERE = Path(__file__).parent / "configs"


if __name__ == "__main__":
    names = sys.argv[1:] or sorted(p.stem for p in HERE.glob("*.toml"))
    status = 0
    for name in names:
        cfg = HERE / f"{name}.toml"
        task = name.split("_")[0]
        t0 = time.perf_counter()
        rc = main([task, "--config", str(cfg)])
        print(f"{name}: exit {rc} in {time.perf_counter() - t0:.1f} s")
        status = max(status, rc)
    sys.exit(status)
