#!/usr/bin/env python3
"""Regenerate every canned CSV (landscapes, sequences, check tables).

Writes into results/csv by default; pass a directory to override. The fig3
sweeps refine 13- and 17-segment schedules over the full grid, so expect a
few minutes of wall time.
"""

import sys
import time

from iongate.scan import reproduce


def main() -> int:
    out = sys.argv[1] if len(sys.argv) > 1 else "results/csv"
    for fig in ("fig1", "fig2", "fig3", "tables", "n40"):
        start = time.time()
        for path in reproduce(fig, out):
            print(path)
        print(f"# {fig}: {time.time() - start:.1f} s", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
