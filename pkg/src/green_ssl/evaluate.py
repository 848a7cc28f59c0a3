"""Metrics and trial orchestration.

Accuracy and F1-macro are computed on unlabeled samples only. Trials are
run serially even though seeds are independent, so that each timed section
owns the machine; parallel trials would contaminate the wall-clock numbers.
"""

import csv
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import anchored, solvers
from .dataio import sample_split
from .graph import DEFAULT_K, DEFAULT_MU, build_knn_gaussian, laplacian, perturbed_laplacian
from .labels import encode, predict

RUN_METHODS = ("gf", "gfg", "llgc", "hf", "1nn")
LEDGER_COLUMNS = ("method", "dataset", "seed", "per_class",
                  "accuracy", "f1", "lm_l", "lm_u", "seconds")


@dataclass
class TrialResult:
    method: str
    seed: int
    accuracy: float
    f1: float
    lm_labeled: float
    lm_unlabeled: float
    seconds: float
    solve_seconds: float = float("nan")
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)


def _eval_mask(pred, truth, split):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} predictions vs {truth.shape} truths")
    mask = split.unlabeled_mask(len(truth))
    if not mask.any():
        raise ValueError("all samples labeled: empty evaluation set")
    return pred, truth, mask


def accuracy(pred, truth, split):
    """Fraction of unlabeled samples predicted correctly."""
    pred, truth, mask = _eval_mask(pred, truth, split)
    return float(np.mean(pred[mask] == truth[mask]))


def f1_macro(pred, truth, split):
    """2 P R / (P + R) with P, R macro-averaged over one-vs-rest problems.

    Classes with zero predicted (resp. actual) positives contribute 0 to the
    precision (resp. recall) average. This is the harmonic mean of the two
    macro averages, not the average of per-class F1 scores.
    """
    pred, truth, mask = _eval_mask(pred, truth, split)
    p, t = pred[mask], truth[mask]
    classes = np.union1d(np.unique(t), np.unique(p))
    precisions, recalls = [], []
    for j in classes:
        tp = np.sum((p == j) & (t == j))
        predicted = np.sum(p == j)
        actual = np.sum(t == j)
        precisions.append(tp / predicted if predicted else 0.0)
        recalls.append(tp / actual if actual else 0.0)
    pm = float(np.mean(precisions))
    rm = float(np.mean(recalls))
    if pm + rm == 0:
        return 0.0
    return 2.0 * pm * rm / (pm + rm)


def _margin(F, labels_of, indices):
    c = F.shape[1]
    diffs = []
    for j in range(1, c + 1):
        pos = indices[labels_of(indices) == j]
        neg = indices[labels_of(indices) != j]
        if len(pos) == 0 or len(neg) == 0:
            raise ValueError(f"class {j} has no samples in the margin index set")
        diffs.append(F[pos, j - 1].mean() - F[neg, j - 1].mean())
    return float(np.mean(diffs))


def label_margin(F, truth, split):
    """Mean over classes of (mean soft label on the class) - (mean off the class).

    Returns (lm_labeled, lm_unlabeled); labeled samples use their given
    labels, unlabeled ones their ground truth.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or F.shape[1] < 2:
        raise ValueError("need a soft label matrix with at least 2 classes")
    truth = np.asarray(truth)
    n = len(truth)
    labeled = split.labeled_indices
    unlabeled = np.flatnonzero(split.unlabeled_mask(n))
    given = np.zeros(n, dtype=np.int64)
    given[labeled] = split.labels
    lm_l = _margin(F, lambda idx: given[idx], labeled)
    lm_u = _margin(F, lambda idx: truth[idx], unlabeled)
    return lm_l, lm_u


def solve_once(ds, split, method, k=DEFAULT_K, gamma=1.0, mu=DEFAULT_MU,
               eta=solvers.DEFAULT_ETA, m=None, variant=None, anchor_seed=0):
    """Build the graph for one split, run one solver, return (pred, report).

    The report is None for the 1-NN baseline, which produces no soft labels.
    """
    if method == "1nn":
        return solvers.baseline_1nn(ds, split), None
    c = int(ds.truth.max())
    coding = variant or ("onehot" if method == "hf" else "pm1")
    Y = encode(split, ds.n, c, variant=coding)
    if method == "gfa":
        anchors = anchored.bkhk(ds, m, seed=anchor_seed)
        affinity = anchored.anchor_affinity(ds, anchors, k=k)
        graph = anchored.build_anchor_graph(affinity, mu=mu)
        report = anchored.gf_anchored(graph, Y)
    else:
        lap = laplacian(build_knn_gaussian(ds, k=k))
        if method == "gf":
            report = solvers.gf_pinv(lap, Y)
        elif method == "gfg":
            report = solvers.gf_gauss(perturbed_laplacian(lap, mu=mu), Y, eta=eta)
        elif method == "llgc":
            report = solvers.llgc(lap, Y, gamma=gamma)
        elif method == "hf":
            report = solvers.harmonic(lap, Y, split)
        else:
            raise ValueError(f"unknown method {method!r}")
    return predict(report.F), report


def _single_trial(ds, split, method, k, gamma, mu, eta, m, variant, seed):
    t0 = time.perf_counter()
    pred, report = solve_once(ds, split, method, k=k, gamma=gamma, mu=mu,
                              eta=eta, m=m, variant=variant, anchor_seed=seed)
    seconds = time.perf_counter() - t0
    acc = accuracy(pred, ds.truth, split)
    f1 = f1_macro(pred, ds.truth, split)
    if report is None:
        return TrialResult(method, seed, acc, f1, float("nan"), float("nan"),
                           seconds, solve_seconds=seconds)
    lm_l, lm_u = label_margin(report.F, ds.truth, split)
    return TrialResult(method, seed, acc, f1, lm_l, lm_u, seconds,
                       solve_seconds=report.seconds)


def run_trials(ds, method, per_class, seeds, k=DEFAULT_K, gamma=1.0,
               mu=DEFAULT_MU, eta=solvers.DEFAULT_ETA, m=None, variant=None):
    """One trial per seed; a failing trial is recorded and does not abort the rest."""
    if method not in RUN_METHODS + ("gfa",):
        raise ValueError(f"unknown method {method!r}; expected one of {RUN_METHODS + ('gfa',)}")
    if method == "gfa" and m is None:
        raise ValueError("method 'gfa' needs an anchor count m")
    results = []
    for seed in seeds:
        try:
            split = sample_split(ds, per_class, seed=seed)
            results.append(_single_trial(ds, split, method, k, gamma, mu, eta,
                                         m, variant, seed))
        except Exception as exc:
            nan = float("nan")
            results.append(TrialResult(method, seed, nan, nan, nan, nan, nan,
                                       error=f"{type(exc).__name__}: {exc}"))
    return results


def summarize(results):
    """Mean and population std of accuracy over the trials that completed."""
    ok = [r for r in results if not r.failed]
    summary = {
        "method": results[0].method if results else "",
        "trials": len(results),
        "failed": len(results) - len(ok),
        "errors": [r.error for r in results if r.failed],
    }
    if ok:
        acc = np.array([r.accuracy for r in ok])
        summary.update({
            "mean_accuracy": float(acc.mean()),
            "std_accuracy": float(acc.std()),  # population std over trials
            "mean_f1": float(np.mean([r.f1 for r in ok])),
            "mean_lm_l": float(np.mean([r.lm_labeled for r in ok])),
            "mean_lm_u": float(np.mean([r.lm_unlabeled for r in ok])),
            "mean_seconds": float(np.mean([r.seconds for r in ok])),
        })
    return summary


def append_ledger(path, results, dataset, per_class):
    """Append one CSV row per trial, writing the header on first use."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(LEDGER_COLUMNS)
        for r in results:
            writer.writerow([r.method, dataset, r.seed, per_class,
                             repr(r.accuracy), repr(r.f1),
                             repr(r.lm_labeled), repr(r.lm_unlabeled),
                             repr(r.seconds)])


def write_summary(path, summary):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
