#!/usr/bin/env python3
"""Regenerate the benchmark CSVs under data/.

wine.csv    UCI Wine (178 x 13, 3 classes), taken from the copy bundled with
            scikit-learn.
breast.csv  UCI Breast Cancer Wisconsin, original (699 x 9, 2 classes), taken
            from MASS::biopsy as shipped in the `pydataset` sdist. The sample
            ID column is dropped; the 16 missing values of the bare-nuclei
            attribute (V6) are imputed with that column's median.

Usage: prepare_datasets.py [--biopsy PATH_TO_biopsy.csv] [--out data]
"""
import argparse
import csv
import pathlib
import statistics

import sklearn.datasets


def write_wine(out: pathlib.Path) -> None:
    bunch = sklearn.datasets.load_wine()
    names = [n.replace("/", "_") for n in bunch.feature_names]
    with open(out / "wine.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names + ["class"])
        for row, label in zip(bunch.data, bunch.target):
            w.writerow([repr(float(v)) if v != int(v) else str(int(v)) for v in row] + [int(label)])


def write_breast(src: pathlib.Path, out: pathlib.Path) -> None:
    with open(src, newline="") as f:
        rows = list(csv.DictReader(f))
    feats = [f"V{i}" for i in range(1, 10)]
    for col in feats:
        present = [int(r[col]) for r in rows if r[col] != "NA"]
        med = int(statistics.median(present))
        for r in rows:
            if r[col] == "NA":
                r[col] = str(med)
    with open(out / "breast.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(feats + ["class"])
        for r in rows:
            w.writerow([r[c] for c in feats] + [r["class"]])


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--biopsy", type=pathlib.Path, default=pathlib.Path("/tmp/biopsy.csv"))
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent / "data")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    write_wine(args.out)
    write_breast(args.biopsy, args.out)


if __name__ == "__main__":
    main()
