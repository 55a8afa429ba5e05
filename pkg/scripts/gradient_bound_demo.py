"""Tabulate |P_T f(x+v) - P_T f(x)| against the integrated Bismut gradient.

    python scripts/gradient_bound_demo.py [--N 20000] [--hurst 0.7]

Demo only: prints a table, no verdicts.
"""

import argparse

from fbm_bismut.harnack import gradient_bound_demo
from fbm_bismut.models import ModelSpec, make_drift, make_sigma, make_test_function


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=20000)
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--hurst", type=float, default=0.7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    model = ModelSpec(make_drift("TANH_BOUNDED"), make_sigma("IDENTITY"), args.hurst, 1.0, (0.0,))
    f = make_test_function("ONE_PLUS_TANH")
    table = gradient_bound_demo(model, f, [[-1.0], [0.0], [1.0]], [0.5], args.N, args.seed, args.n)
    print(f"{'x':>6} {'|diff|':>10} {'se':>8} {'bound':>10} {'se':>8}")
    for row in table:
        print(f"{row['x'][0]:6.2f} {row['difference']:10.5f} {row['difference_se']:8.5f} "
              f"{row['gradient_bound']:10.5f} {row['gradient_bound_se']:8.5f}")


if __name__ == "__main__":
    main()
