"""Write a small synthetic multi-label CSV for smoke runs and tests.

Labels come from thresholded noisy linear scores, so neighbouring labels share
features and some instances carry several labels.
"""

import argparse

import numpy as np

from lpwfcm.data import MultiLabelDataset, write_csv


def make_dataset(n=200, d=12, n_labels=4, seed=0, noise=1.0, offset=0.6):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    W = rng.normal(size=(d, n_labels))
    Y = (X @ W + noise * rng.normal(size=(n, n_labels)) > offset).astype(np.int8)
    return MultiLabelDataset(X, Y, [f"x{i}" for i in range(d)],
                             [f"y{j}" for j in range(n_labels)], name="synthetic")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", help="CSV path")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d", type=int, default=12)
    p.add_argument("--labels", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    write_csv(make_dataset(args.n, args.d, args.labels, args.seed), args.out)


if __name__ == "__main__":
    main()
