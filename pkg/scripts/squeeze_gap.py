"""Gap between the cover-entropy average and the best window-local partition.

Full 3-shift, uniform Bernoulli measure, cover {[0,1],[1,2]} on one site.
Prints both series and their difference for each extension radius.

    python scripts/squeeze_gap.py --nmax 12 --extend 1 2
"""

import argparse
import time

from intricacy.complexity_engine import asc_mu_minus, asc_mu_plus
from intricacy.cover_algebra import CylinderCover
from intricacy.group_model import folner_window
from intricacy.measure_entropy import Bernoulli
from intricacy.symbolic_space import full_shift


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nmin", type=int, default=2)
    ap.add_argument("--nmax", type=int, default=12)
    ap.add_argument("--extend", type=int, nargs="+", default=[1])
    ap.add_argument("--coeffs", default="uniform")
    args = ap.parse_args()

    X = full_shift(3)
    U = CylinderCover.from_strings(folner_window(1), [["0", "1"], ["1", "2"]])
    mu = Bernoulli([1 / 3] * 3)
    ns = list(range(args.nmin, args.nmax + 1))

    t0 = time.perf_counter()
    minus = asc_mu_minus(X, mu, U, args.coeffs, ns)
    print(f"minus series computed in {time.perf_counter() - t0:.1f}s")
    for ext in args.extend:
        t0 = time.perf_counter()
        plus = asc_mu_plus(X, mu, U, args.coeffs, ns, extend=ext)
        print(f"\nextend={ext}: {plus.candidates} candidate partitions, "
              f"{'exhaustive' if plus.exhaustive else 'local search'}, {time.perf_counter() - t0:.1f}s")
        print(f"{'n':>3} {'minus':>10} {'plus':>10} {'gap':>10}")
        for n, m, p in zip(ns, minus.values, plus.series.values):
            print(f"{n:3d} {m:10.6f} {p:10.6f} {p - m:10.6f}")


if __name__ == "__main__":
    main()
