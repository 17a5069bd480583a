#!/usr/bin/env python3
"""Convert the 5,000-image MNIST sample shipped with mlxtend into IDX files.

Usage: prepare_mnist_subset.py [--csv PATH] [--out DIR] [--test N]

Without --csv the script looks for the file inside an installed mlxtend.
Rows are shuffled with a fixed seed and split into
train/test IDX pairs that `dataset.kind = "mnist-idx"` can read.
"""
import argparse
import gzip
import os
import struct
import sys

import numpy as np


def find_csv():
    try:
        import mlxtend  # noqa: F401
        p = os.path.join(os.path.dirname(mlxtend.__file__), "data", "data", "mnist_5k.csv.gz")
        if os.path.exists(p):
            return p
    except ImportError:
        pass
    sys.exit("mnist_5k.csv.gz not found; pass --csv or `pip install mlxtend`")


def write_idx(images, labels, img_path, lab_path):
    n = images.shape[0]
    with open(img_path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(lab_path, "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv")
    ap.add_argument("--out", default="data/mnist-5k")
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = np.loadtxt(gzip.open(args.csv or find_csv()), delimiter=",")
    rng = np.random.default_rng(args.seed)
    rows = rows[rng.permutation(rows.shape[0])]
    x, y = rows[:, :-1], rows[:, -1]
    n_test = args.test
    os.makedirs(args.out, exist_ok=True)
    write_idx(x[n_test:], y[n_test:], os.path.join(args.out, "train-images-idx3-ubyte"),
              os.path.join(args.out, "train-labels-idx1-ubyte"))
    write_idx(x[:n_test], y[:n_test], os.path.join(args.out, "t10k-images-idx3-ubyte"),
              os.path.join(args.out, "t10k-labels-idx1-ubyte"))
    print(f"wrote {rows.shape[0] - n_test} train / {n_test} test images to {args.out}")


if __name__ == "__main__":
    main()
