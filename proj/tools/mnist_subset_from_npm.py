#!/usr/bin/env python3
"""Builds a small MNIST subset in IDX format from the npm `mnist` package.

The npm package stores 10,000 digits as JSON arrays of pixel/255 values
rounded to three decimals; rounding back to the nearest byte recovers the
original greyscale values. Digits are shuffled with a fixed seed and split
into disjoint train/test files.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_subset_from_npm.py package/src/digits data/mnist-subset
"""
import argparse
import gzip
import json
import pathlib
import random
import struct


def write_idx_images(path, images):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--train", type=int, default=6000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240101)
    args = ap.parse_args()

    samples = []
    for digit in range(10):
        raw = json.loads(pathlib.Path(args.digits_dir, f"{digit}.json").read_text())["data"]
        for start in range(0, len(raw), 784):
            pixels = [min(255, max(0, round(v * 255))) for v in raw[start:start + 784]]
            samples.append((pixels, digit))

    random.Random(args.seed).shuffle(samples)
    if args.train + args.test > len(samples):
        raise SystemExit("not enough samples for the requested split")
    train = samples[:args.train]
    test = samples[args.train:args.train + args.test]

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_idx_images(out / "train-images-idx3-ubyte.gz", [s[0] for s in train])
    write_idx_labels(out / "train-labels-idx1-ubyte.gz", [s[1] for s in train])
    write_idx_images(out / "t10k-images-idx3-ubyte.gz", [s[0] for s in test])
    write_idx_labels(out / "t10k-labels-idx1-ubyte.gz", [s[1] for s in test])


if __name__ == "__main__":
    main()
