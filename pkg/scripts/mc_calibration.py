"""Coverage of the Monte Carlo estimator's 3-sigma interval against the exact average.

    python scripts/mc_calibration.py --n 12 --samples 10000 --seeds 100
"""

import argparse

import numpy as np

from intricacy.complexity_engine import RunOptions, SubsetTerms, asc_top
from intricacy.cover_algebra import symbol_partition
from intricacy.symbolic_space import full_shift, golden_mean_shift


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--shift", choices=["golden", "full2"], default="golden")
    ap.add_argument("--coeffs", default="uniform")
    args = ap.parse_args()

    X = golden_mean_shift() if args.shift == "golden" else full_shift(2)
    U = symbol_partition(X)
    terms = SubsetTerms(X, U)
    exact = asc_top(X, U, args.coeffs, [args.n], terms=terms).values[0]
    z = []
    for seed in range(args.seeds):
        terms.options = RunOptions(mode="mc", samples=args.samples, seed=seed)
        r = asc_top(X, U, args.coeffs, [args.n], terms=terms).records[0]
        z.append((r.value - exact) / r.stderr if r.stderr > 0 else 0.0)
    z = np.array(z)
    print(f"exact = {exact:.10f}")
    print(f"within 1 se: {np.mean(np.abs(z) <= 1):.2f}  2 se: {np.mean(np.abs(z) <= 2):.2f}  "
          f"3 se: {int(np.sum(np.abs(z) <= 3))}/{len(z)}")
    print(f"z mean {z.mean():+.3f}, z std {z.std(ddof=1):.3f}")


if __name__ == "__main__":
    main()
