"""Membership table for the oracle fixtures at a chosen ladder.

    python scripts/catalog_table.py [--top 256] [--csv out.csv]
"""

import argparse
import csv
import sys

from hsliouville import diagnostics as dg
from hsliouville.models import oracle_catalog

SETS = ("hilbert_schmidt", "invariance", "dom_H", "core_D", "core_D0", "dom_H2")
SHORT = {"convergent-evidence": "conv", "divergent-evidence": "DIV", "inconclusive": "?"}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--top", type=int, default=256)
    p.add_argument("--csv", help="also write the table as CSV")
    args = p.parse_args(argv)
    ladder = dg.TruncationLadder(tuple(d for d in dg.DEFAULT_DIMS if d <= args.top))

    rows = []
    mismatches = 0
    for f in oracle_catalog():
        r = dg.diagnose(f.hamiltonian, f.operator, ladder).memberships()
        row = {"fixture": f.name}
        for s in SETS:
            got = r[s].classification.value
            exp = f.expected.get(s)
            flag = "" if exp is None or exp.classification == got else "!"
            mismatches += bool(flag)
            row[s] = SHORT[got] + flag
        rows.append(row)

    widths = {k: max(len(k), *(len(r[k]) for r in rows)) for k in rows[0]}
    print("  ".join(k.ljust(w) for k, w in widths.items()))
    for r in rows:
        print("  ".join(r[k].ljust(w) for k, w in widths.items()))
    print(f"\nladder {list(ladder.dims)}; '!' marks a disagreement with the oracle ({mismatches} total)")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 1 if mismatches else 0


if __name__ == "__main__":
    sys.exit(main())
