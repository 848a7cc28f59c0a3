"""Label matrix encodings and soft-label decoding."""

import csv
from dataclasses import dataclass

import numpy as np

VARIANTS = ("pm1", "onehot")


@dataclass
class LabelMatrix:
    """n x c supervision matrix; unlabeled rows are all zero.

    pm1 rows hold one +1 and c-1 entries of -1; onehot rows one 1.
    """

    values: np.ndarray
    variant: str
    labeled_count: int


def encode(split, n, c, variant="pm1"):
    """Encode a labeled split into a label matrix.

    The pm1 variant marks labeled negative classes with -1, the onehot
    variant with 0. The default is pm1.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    if len(split) and split.labels.max() > c:
        raise ValueError(f"label id {split.labels.max()} exceeds class count {c}")
    if len(split) and split.labeled_indices.max() >= n:
        raise ValueError("labeled index out of range")
    values = np.zeros((n, c), dtype=np.float64)
    rows = split.labeled_indices
    cols = split.labels - 1
    if variant == "pm1":
        values[rows] = -1.0
    values[rows, cols] = 1.0
    return LabelMatrix(values=values, variant=variant, labeled_count=len(split))


def predict(soft_labels):
    """Row-wise argmax of a soft label matrix, as class ids 1..c.

    Ties break toward the lowest class index.
    """
    values = np.asarray(soft_labels, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("soft labels contain non-finite entries")
    return np.argmax(values, axis=1).astype(np.int64) + 1


def write_predictions(path, pred, truth):
    """Predictions CSV: sample_index, predicted_class, true_class."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_index", "predicted_class", "true_class"])
        for i, (p, t) in enumerate(zip(pred, truth)):
            writer.writerow([i, int(p), int(t)])
