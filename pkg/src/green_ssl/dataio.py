"""Dataset loading, synthetic generators, and seeded labeled/unlabeled splits.

All randomness goes through numpy's PCG64 generator so that splits and
synthetic datasets are reproducible across platforms for a fixed seed.
Class ids are dense integers 1..c; string labels are mapped in order of
first appearance.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class Dataset:
    """Feature matrix plus ground-truth class ids.

    features : (n, d) float array
    truth    : (n,) int array with values in 1..class_count, every id present
    """

    features: np.ndarray
    truth: np.ndarray
    class_count: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.truth = np.asarray(self.truth, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] < 1 or self.features.shape[1] < 1:
            raise ValueError("features must be a non-empty 2-D matrix")
        if self.truth.shape != (self.features.shape[0],):
            raise ValueError("truth must have one class id per sample")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite values")
        c = self.class_count
        present = np.unique(self.truth)
        if c < 1 or present.min() < 1 or present.max() > c or len(present) != c:
            raise ValueError(
                f"truth must use every class id in 1..{c}, got ids {present.tolist()}"
            )

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]


@dataclass
class LabeledSplit:
    """Which samples are labeled, and with what.

    labeled_indices are kept sorted ascending; labels[i] is the class id of
    sample labeled_indices[i].
    """

    labeled_indices: np.ndarray
    labels: np.ndarray
    seed: int = 0

    def __post_init__(self):
        self.labeled_indices = np.asarray(self.labeled_indices, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labeled_indices.ndim != 1 or self.labels.shape != self.labeled_indices.shape:
            raise ValueError("labeled_indices and labels must be matching 1-D arrays")
        if len(np.unique(self.labeled_indices)) != len(self.labeled_indices):
            raise ValueError("labeled_indices must be distinct")
        order = np.argsort(self.labeled_indices)
        self.labeled_indices = self.labeled_indices[order]
        self.labels = self.labels[order]

    def __len__(self):
        return len(self.labeled_indices)

    def unlabeled_mask(self, n):
        mask = np.ones(n, dtype=bool)
        mask[self.labeled_indices] = False
        return mask


def _map_labels(raw):
    """Map raw label tokens to dense class ids 1..c.

    Integer labels that already form exactly {1..c} are kept as-is (so that
    saving and reloading a Dataset round-trips truth); anything else is
    mapped by first appearance.
    """
    ints = []
    all_int = True
    for tok in raw:
        try:
            ints.append(int(tok))
        except (TypeError, ValueError):
            all_int = False
            break
    if all_int:
        distinct = sorted(set(ints))
        if distinct == list(range(1, len(distinct) + 1)):
            return np.array(ints, dtype=np.int64), len(distinct)
    seen = {}
    ids = np.empty(len(raw), dtype=np.int64)
    for i, tok in enumerate(raw):
        if tok not in seen:
            seen[tok] = len(seen) + 1
        ids[i] = seen[tok]
    return ids, len(seen)


def load_csv(path, label_column=-1):
    """Load a comma-separated dataset.

    A header row is auto-detected: if any feature cell of the first row is
    non-numeric, the row is skipped. The column at ``label_column`` holds the
    class label; the rest are numeric features.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"empty dataset file: {path}")
    width = len(rows[0])
    lbl = label_column if label_column >= 0 else width + label_column
    if not 0 <= lbl < width:
        raise ValueError(f"label column {label_column} out of range for {width} columns")

    def feature_cells(row):
        return [cell for j, cell in enumerate(row) if j != lbl]

    start = 0
    try:
        [float(cell) for cell in feature_cells(rows[0])]
    except ValueError:
        start = 1
    if start == len(rows):
        raise ValueError(f"empty dataset file (header only): {path}")

    feats = np.empty((len(rows) - start, width - 1), dtype=np.float64)
    raw_labels = []
    for i, row in enumerate(rows[start:]):
        if len(row) != width:
            raise ValueError(f"row {i + start + 1}: expected {width} columns, got {len(row)}")
        for j, cell in enumerate(feature_cells(row)):
            try:
                feats[i, j] = float(cell)
            except ValueError:
                raise ValueError(
                    f"non-numeric feature cell at row {i + start + 1}, column {j + 1}: {cell!r}"
                ) from None
        raw_labels.append(row[lbl].strip())
    truth, c = _map_labels(raw_labels)
    return Dataset(feats, truth, c)


def save_csv(ds, path, label_column=-1):
    """Write a Dataset back to CSV (features plus integer class id column)."""
    n, d = ds.features.shape
    lbl = label_column if label_column >= 0 else d + 1 + label_column
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(n):
            cells = [repr(float(v)) for v in ds.features[i]]
            cells.insert(lbl, str(int(ds.truth[i])))
            writer.writerow(cells)


def load_libsvm(path):
    """Load a sparse "label idx:val" text file into a dense Dataset.

    Feature indices are 1-based; absent entries are zero; d is the largest
    feature index seen anywhere in the file.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    raw_labels = []
    rows = []
    d = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            toks = line.split()
            raw_labels.append(toks[0])
            entries = {}
            for tok in toks[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ValueError(f"line {lineno}: malformed token {tok!r}") from None
                if idx < 1:
                    raise ValueError(f"line {lineno}: feature index {idx} < 1")
                if idx in entries:
                    raise ValueError(f"line {lineno}: duplicate feature index {idx}")
                entries[idx] = val
                d = max(d, idx)
            rows.append(entries)
    if not rows:
        raise ValueError(f"empty dataset file: {path}")
    if d == 0:
        raise ValueError(f"no feature entries in {path}")
    feats = np.zeros((len(rows), d), dtype=np.float64)
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            feats[i, idx - 1] = val
    truth, c = _map_labels(raw_labels)
    return Dataset(feats, truth, c)


def gen_two_ring(n_inner=500, n_outer=1000, r_inner=10.0, r_outer=25.0, noise=0.4, seed=0):
    """Two concentric rings in the plane: inner ring class 1, outer class 2.

    Points sit at uniformly spaced angles with radial Gaussian noise of the
    given standard deviation. Deterministic per seed.
    """
    if n_inner < 1 or n_outer < 1:
        raise ValueError("ring sizes must be >= 1")
    if r_inner >= r_outer:
        raise ValueError(f"r_inner must be < r_outer, got {r_inner} >= {r_outer}")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    rng = _rng(seed)
    pts = []
    for count, radius in ((n_inner, r_inner), (n_outer, r_outer)):
        angles = 2.0 * np.pi * np.arange(count) / count
        radii = radius + noise * rng.standard_normal(count)
        pts.append(np.column_stack((radii * np.cos(angles), radii * np.sin(angles))))
    features = np.vstack(pts)
    truth = np.concatenate((np.ones(n_inner, dtype=np.int64), np.full(n_outer, 2, dtype=np.int64)))
    return Dataset(features, truth, 2)


def gen_balance():
    """Deterministic reconstruction of the classic balance-scale benchmark.

    All 5^4 combinations of left/right weight and distance in 1..5, in
    lexicographic order; the class is decided by comparing the two torques
    (weight x distance). 625 samples, 4 features, 3 classes.
    """
    grid = np.array(
        [(lw, ld, rw, rd) for lw in range(1, 6) for ld in range(1, 6)
         for rw in range(1, 6) for rd in range(1, 6)],
        dtype=np.float64,
    )
    left = grid[:, 0] * grid[:, 1]
    right = grid[:, 2] * grid[:, 3]
    names = np.where(left == right, "B", np.where(left > right, "L", "R"))
    truth, c = _map_labels(names.tolist())
    return Dataset(grid, truth, c)


def gen_blobs(n, d, c, spread=1.0, separation=6.0, seed=0):
    """Gaussian blobs, one per class, with centers drawn once per seed.

    Class sizes are as equal as possible; handy for property tests and the
    anchor-scaling benchmark.
    """
    if n < c:
        raise ValueError("need at least one sample per class")
    rng = _rng(seed)
    centers = separation * rng.standard_normal((c, d))
    sizes = np.full(c, n // c, dtype=np.int64)
    sizes[: n % c] += 1
    feats = []
    truth = []
    for j in range(c):
        feats.append(centers[j] + spread * rng.standard_normal((sizes[j], d)))
        truth.append(np.full(sizes[j], j + 1, dtype=np.int64))
    return Dataset(np.vstack(feats), np.concatenate(truth), c)


def sample_split(ds, per_class, seed=0):
    """Draw exactly ``per_class`` labeled samples from every class.

    Sampling is without replacement and deterministic per seed.
    """
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    rng = _rng(seed)
    chosen = []
    for class_id in range(1, ds.class_count + 1):
        members = np.flatnonzero(ds.truth == class_id)
        if per_class > len(members):
            raise ValueError(
                f"class {class_id} has only {len(members)} samples, cannot label {per_class}"
            )
        chosen.append(rng.choice(members, size=per_class, replace=False))
    indices = np.concatenate(chosen)
    return LabeledSplit(indices, ds.truth[indices], seed=seed)
