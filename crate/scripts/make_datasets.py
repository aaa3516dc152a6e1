#!/usr/bin/env python3
"""Rebuild the LIBSVM-format datasets under data/ from locally available sources.

mushrooms: one-hot encoding of the UCI agaricus-lepiota table (raw label e -> 1,
p -> 2). Only attribute values that occur in the table get a column, in the
attribute/value order of the UCI names file.

breast_cancer: the Wisconsin diagnostic table bundled with scikit-learn
(raw label 0 = malignant, 1 = benign), written unscaled.
"""
import argparse
import csv
import pathlib

# attribute value alphabets, in the order of agaricus-lepiota.names
ATTRIBUTES = [
    "bcxfks", "fgys", "nbcgrpuewy", "tf", "alcyfmnps", "adfn", "cwd", "bn",
    "knbhgropuewy", "et", "bcuezr?", "fyks", "fyks", "nbcgopewy", "nbcgopewy",
    "pu", "nowy", "not", "ceflnpsz", "knbhrouwy", "acnsvy", "glmpuwd",
]


def mushrooms(src: pathlib.Path, out: pathlib.Path) -> None:
    rows = list(csv.reader(src.open()))
    present = [set(r[j + 1] for r in rows) for j in range(len(ATTRIBUTES))]
    column = {}
    for j, alphabet in enumerate(ATTRIBUTES):
        for v in alphabet:
            if v in present[j]:
                column[(j, v)] = len(column) + 1
    with out.open("w", newline="\n") as fo:
        for r in rows:
            label = "1" if r[0] == "e" else "2"
            idx = sorted(column[(j, v)] for j, v in enumerate(r[1:]))
            fo.write(label + "".join(f" {i}:1" for i in idx) + "\n")


def breast_cancer(out: pathlib.Path) -> None:
    from sklearn.datasets import load_breast_cancer

    data = load_breast_cancer()
    with out.open("w", newline="\n") as fo:
        for x, y in zip(data.data, data.target):
            feats = " ".join(f"{i + 1}:{float(v)!r}" for i, v in enumerate(x) if v != 0.0)
            fo.write(f"{int(y)} {feats}\n".rstrip() + "\n")


def main() -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--agaricus", type=pathlib.Path, required=True,
                   help="path to agaricus-lepiota.data")
    p.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data"))
    a = p.parse_args()
    a.out.mkdir(exist_ok=True)
    mushrooms(a.agaricus, a.out / "mushrooms")
    breast_cancer(a.out / "breast_cancer")


if __name__ == "__main__":
    main()
