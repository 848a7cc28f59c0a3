"""Graph-based semi-supervised classification via Laplacian Green's functions.

The public surface: dataset loading and synthetic generators, kNN Gaussian
graph construction, the spectral and Gaussian-elimination classifiers with
LLGC/harmonic/1-NN baselines, the anchored low-rank solver, and the metric
harness used by the command line driver.
"""

from .anchored import (AnchorAffinity, AnchorGraph, AnchorSet, anchor_affinity,
                       bkhk, build_anchor_graph, gf_anchored)
from .dataio import (Dataset, LabeledSplit, gen_balance, gen_blobs, gen_two_ring,
                     load_csv, load_libsvm, sample_split, save_csv)
from .evaluate import (TrialResult, accuracy, f1_macro, label_margin, run_trials,
                       solve_once, summarize)
from .graph import (Components, Laplacian, SparseSimilarity, build_knn_gaussian,
                    connected_components, laplacian, load_graph,
                    perturbed_laplacian, save_graph)
from .labels import LabelMatrix, encode, predict, write_predictions
from .solvers import (EigenSystem, SolverReport, baseline_1nn, compute_eigensystem,
                      gf_gauss, gf_pinv, harmonic, llgc)

__version__ = "0.1.0"

__all__ = [
    "AnchorAffinity", "AnchorGraph", "AnchorSet", "Components", "Dataset",
    "EigenSystem", "LabelMatrix", "LabeledSplit", "Laplacian", "SolverReport",
    "SparseSimilarity", "TrialResult", "accuracy", "anchor_affinity",
    "baseline_1nn", "bkhk", "build_anchor_graph", "build_knn_gaussian",
    "compute_eigensystem", "connected_components", "encode", "f1_macro",
    "gen_balance", "gen_blobs", "gen_two_ring", "gf_anchored", "gf_gauss",
    "gf_pinv", "harmonic", "label_margin", "laplacian", "llgc", "load_csv",
    "load_graph", "load_libsvm", "perturbed_laplacian", "predict", "run_trials",
    "sample_split", "save_csv", "save_graph", "solve_once", "summarize",
    "write_predictions",
]
