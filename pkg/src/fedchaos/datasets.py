"""Bundled benchmark data.

The Breast Cancer Wisconsin (diagnostic) tabular set ships with
scikit-learn; this module exposes it as a Dataset and can materialize it
as a CSV for the loader path and the CLI. The positive class (label 1) is
malignant, so the label is the complement of scikit-learn's target
encoding (which marks benign as 1).

    python -m fedchaos.datasets out.csv
"""

from __future__ import annotations

import csv

import numpy as np

from .data import Dataset

LABEL_COLUMN = "diagnosis"


def load_breast_cancer_dataset() -> Dataset:
    """569 rows, 30 numeric features, label 1 = malignant."""
    from sklearn.datasets import load_breast_cancer

    raw = load_breast_cancer()
    labels = 1.0 - raw.target.astype(np.float64)
    return Dataset(tuple(raw.feature_names), raw.data.astype(np.float64), labels)


def write_breast_cancer_csv(path) -> None:
    """Materialize the dataset as a headered CSV (floats via repr, so the
    file reloads losslessly)."""
    ds = load_breast_cancer_dataset()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([LABEL_COLUMN, *ds.feature_names])
        for row, label in zip(ds.features, ds.labels):
            writer.writerow([int(label), *[repr(float(v)) for v in row]])


BUILTIN_DATASETS = {
    "breast_cancer": load_breast_cancer_dataset,
}


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Write a bundled dataset as CSV.")
    parser.add_argument("path", help="output CSV path")
    args = parser.parse_args(argv)
    write_breast_cancer_csv(args.path)
    print(f"wrote {args.path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
