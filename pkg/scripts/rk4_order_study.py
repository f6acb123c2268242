"""Error of fixed-step rk4 against the spectral solution over a range of steps.

Prints the error and the ratio to the next-smaller step; for a fourth-order
method the ratio under halving approaches 16 until round-off takes over.
"""

import argparse

import numpy as np

from hsliouville import engine as eng
from hsliouville.core_ops import TruncatedMatrix, hs_norm
from hsliouville.models import DiagonalHamiltonian, fixture, realize_operator


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--fixture", default="exp-decay")
    args = p.parse_args(argv)

    h = DiagonalHamiltonian.from_source("n")
    a = realize_operator(fixture(args.fixture).operator, args.dim)
    a = TruncatedMatrix(a.entries / max(abs(np.trace(a.entries)), 1e-300))
    ref = eng.evolve(h, a, [0.0, args.time]).states[-1]
    steps = [0.2 / 2**k for k in range(7)]
    errs = [hs_norm(TruncatedMatrix(eng.evolve(h, a, [0.0, args.time], "rk4", step=s, force=True)
                                    .states[-1].entries - ref.entries)) for s in steps]
    print(f"{'step':>10s} {'error':>12s} {'ratio':>8s}")
    for i, (s, e) in enumerate(zip(steps, errs)):
        ratio = errs[i] / errs[i + 1] if i + 1 < len(errs) and errs[i + 1] > 0 else float("nan")
        print(f"{s:10.5f} {e:12.4e} {ratio:8.3f}")


if __name__ == "__main__":
    main()
