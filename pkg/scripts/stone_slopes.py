"""Log-log slopes of the difference-quotient residual for every fixture.

Operators in the domain give slope ~1; the table also lists the Courbage
ratio sup_t ||U(t)A - A|| / (|t| ||[H, A]||) at the truncation.
"""

import argparse

from hsliouville import engine as eng
from hsliouville.models import DiagonalHamiltonian, oracle_catalog, realize_operator


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dim", type=int, default=64)
    args = p.parse_args(argv)

    h = DiagonalHamiltonian.from_source("n")
    ts = [1e-1, 1e-2, 1e-3, 1e-4]
    print(f"{'fixture':22s} {'stone slope':>12s} {'courbage':>12s}")
    for f in oracle_catalog():
        a = realize_operator(f.operator, args.dim)
        stone = eng.stone_probe(h, a, ts)
        court = eng.courbage_probe(h, a, [1.0] + ts)
        print(f"{f.name:22s} {stone.slope:12.4f} {court.max_ratio:12.9f}")


if __name__ == "__main__":
    main()
