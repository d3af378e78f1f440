"""Run every built-in preset through the CLI and summarise the exit statuses.

    python3 scripts/run_presets.py --out fluxtrap-out
"""

import argparse
import contextlib
import io
import sys
from pathlib import Path

from fluxtrap import cli


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--out", default="fluxtrap-out")
    p.add_argument("names", nargs="*", help="presets to run (default: all)")
    args = p.parse_args(argv)

    worst = 0
    for name in args.names or cli.list_presets():
        command = "sweep" if name.startswith("sweep_") else "run"
        with contextlib.redirect_stdout(io.StringIO()):
            code = cli.main([command, name, "--out", str(Path(args.out) / name), "--quiet"])
        print(f"{name:32s} {command:5s} exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
