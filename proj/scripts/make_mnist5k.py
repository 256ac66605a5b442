#!/usr/bin/env python3
"""Write the 5,000-sample MNIST subset shipped with mlxtend as IDX files.

Usage: make_mnist5k.py OUT_DIR [path/to/mnist_5k.csv.gz]

Without a CSV path the script imports mlxtend to locate it.  The CSV is
sorted by label; each class contributes 450 train and 50 test images,
interleaved with a fixed seed.
"""
import gzip
import os
import struct
import sys

import numpy as np


def write_idx(path, magic, dims, payload):
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload)


def main():
    out = sys.argv[1]
    if len(sys.argv) > 2:
        csv = sys.argv[2]
    else:
        import mlxtend.data.mnist as m
        csv = m.DATA_PATH
    with gzip.open(csv, "rt") as f:
        tmp = np.loadtxt(f, delimiter=",")
    x = tmp[:, :-1].astype(np.uint8)
    y = tmp[:, -1].astype(np.uint8)
    os.makedirs(out, exist_ok=True)
    rng = np.random.default_rng(20230101)
    train_idx, test_idx = [], []
    for c in range(10):
        idx = np.flatnonzero(y == c)
        train_idx.extend(idx[:450])
        test_idx.extend(idx[450:500])
    train_idx = rng.permutation(np.array(train_idx))
    test_idx = rng.permutation(np.array(test_idx))
    for name, sel in (("train", train_idx), ("t10k", test_idx)):
        xs, ys = x[sel], y[sel]
        write_idx(os.path.join(out, f"{name}-images-idx3-ubyte"), 0x803,
                  (len(xs), 28, 28), xs.tobytes())
        write_idx(os.path.join(out, f"{name}-labels-idx1-ubyte"), 0x801,
                  (len(ys),), ys.tobytes())


if __name__ == "__main__":
    main()
