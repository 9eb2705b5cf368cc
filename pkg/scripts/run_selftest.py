#!/usr/bin/env python3
"""Run the acceptance battery directly (same checks as `ovc selftest`),
printing one line per criterion and exiting nonzero on any failure."""

import sys
import time

from ovc.acceptance import run_all


def main():
    t0 = time.monotonic()
    failed = 0
    for r in run_all():
        status = "PASS" if r.passed else "FAIL"
        print(f"criterion {r.number:02d} [{status}] {r.name}: {r.detail}")
        failed += not r.passed
    print(f"-- {14 - failed}/14 criteria passed in "
          f"{time.monotonic() - t0:.1f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
