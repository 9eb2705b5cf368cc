#!/usr/bin/env python3
"""Drive the CLI over every shipped problem file and print the reports.

Usage: python scripts/run_problems.py [--format text|structured]
"""

import argparse
import pathlib
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--format", default="text",
                    choices=("text", "structured"))
    args = ap.parse_args()

    failures = 0
    for path in sorted((ROOT / "problems").glob("*.ovc")):
        command = None
        for line in path.read_text().splitlines():
            if line.startswith("command "):
                command = line.split()[1]
                break
        if command == "selftest":
            continue  # the full battery has its own script
        print(f"== {path.name} ({command})")
        proc = subprocess.run(
            [sys.executable, "-m", "ovc.cli", command, str(path),
             "--format", args.format])
        failures += proc.returncode != 0
        print()
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
