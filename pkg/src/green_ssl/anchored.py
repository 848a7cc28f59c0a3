"""Anchor-graph acceleration.

Anchors come from balanced hierarchical 2-means (every split divides a
cluster into halves differing by at most one sample). The sample-to-anchor
affinity Z is the parameter-free k-neighbor form whose rows sum to one, so
the implied similarity B B^T has unit degrees and the big linear system
collapses, via the matrix inversion lemma, to an (m+1) x (m+1) solve.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graph import DEFAULT_K, DEFAULT_MU, pairwise_sq_dists
from .solvers import SolverReport, _y_values

BKHK_MAX_ITER = 100


@dataclass
class AnchorSet:
    """m representative points in feature space."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 2:
            raise ValueError("need an m x d matrix with m >= 2 anchors")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("anchor points contain non-finite values")

    @property
    def m(self):
        return self.points.shape[0]


@dataclass
class AnchorAffinity:
    """Row-stochastic n x m sample-to-anchor affinity with k nonzeros per row."""

    Z: sparse.csr_matrix
    k: int


@dataclass
class AnchorGraph:
    """Normalized anchor factor B = Z Lambda^{-1/2}, kept dense for BLAS."""

    B: np.ndarray
    theta: float
    mu: float


def _balanced_two_means(points, rng):
    """Split points into halves of size ceil(s/2) / floor(s/2).

    Ranks d_i = |x_i - c1|^2 - |x_i - c2|^2 and sends the smallest half to
    cluster one; iterates until the assignment stabilizes or BKHK_MAX_ITER.
    Returns local index arrays (first, second).
    """
    s = len(points)
    first_size = (s + 1) // 2
    init = rng.choice(s, size=2, replace=False)
    c1, c2 = points[init[0]], points[init[1]]
    prev = None
    for _ in range(BKHK_MAX_ITER):
        d = ((points - c1) ** 2).sum(axis=1) - ((points - c2) ** 2).sum(axis=1)
        order = np.argsort(d, kind="stable")
        first = np.sort(order[:first_size])
        if prev is not None and np.array_equal(first, prev):
            break
        prev = first
        second = np.sort(order[first_size:])
        c1 = points[first].mean(axis=0)
        c2 = points[second].mean(axis=0)
    second = np.setdiff1d(np.arange(s), first, assume_unique=True)
    return first, second


def _split_tree(features, indices, depth, seedseq):
    """Recursively halve an index set; returns leaf index arrays in DFS order."""
    if depth == 0:
        return [indices]
    own, left, right = seedseq.spawn(3)
    rng = np.random.Generator(np.random.PCG64(own))
    first, second = _balanced_two_means(features[indices], rng)
    return (_split_tree(features, indices[first], depth - 1, left)
            + _split_tree(features, indices[second], depth - 1, right))


def bkhk(ds, m, seed=0):
    """Balanced k-means based hierarchical k-means anchor generation.

    m must be a power of two (the recursion halves the sample set); anchors
    are the centroids of the 2^t leaf clusters. Deterministic per seed.
    """
    n = ds.n
    if m < 2 or m & (m - 1):
        suggestion = 1 << max((m - 1).bit_length(), 1)
        raise ValueError(f"anchor count must be a power of two >= 2; try m={suggestion}")
    if m > n:
        raise ValueError(f"anchor count {m} exceeds sample count {n}")
    depth = m.bit_length() - 1
    leaves = _split_tree(ds.features, np.arange(n), depth, np.random.SeedSequence(seed))
    return AnchorSet(np.vstack([ds.features[leaf].mean(axis=0) for leaf in leaves]))


def anchor_affinity(ds, anchors, k=DEFAULT_K):
    """Parameter-free affinity between samples and their k nearest anchors.

    With squared distances e sorted per sample, the weight on anchor l is
    (e_(k+1) - e_l) / (k e_(k+1) - sum_{j<=k} e_(j)) whenever e_l < e_(k+1);
    rows sum to one by construction and the result is invariant to scaling
    the features. Coalescing distances (denominator 0) fall back to uniform
    1/k over the k nearest.
    """
    m = anchors.m
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={m}")
    E = pairwise_sq_dists(ds.features, anchors.points)
    order = np.argsort(E, axis=1, kind="stable")
    nearest = order[:, :k]
    vals = np.take_along_axis(E, nearest, axis=1)
    threshold = np.take_along_axis(E, order[:, k:k + 1], axis=1)  # e_(k+1)
    denom = k * threshold - vals.sum(axis=1, keepdims=True)
    weights = np.where(denom > 0, (threshold - vals) / np.where(denom > 0, denom, 1.0),
                       1.0 / k)
    n = ds.n
    rows = np.repeat(np.arange(n), k)
    Z = sparse.csr_matrix((weights.ravel(), (rows, nearest.ravel())), shape=(n, m))
    Z.eliminate_zeros()
    return AnchorAffinity(Z=Z, k=k)


def build_anchor_graph(affinity, mu=DEFAULT_MU):
    """Normalize Z into B = Z Lambda^{-1/2} with Lambda = Diag(Z^T 1).

    Every anchor must be claimed by at least one sample; the implied
    similarity B B^T then has unit row sums.
    """
    Z = affinity.Z
    n = Z.shape[0]
    col_sums = np.asarray(Z.sum(axis=0)).ravel()
    orphans = np.flatnonzero(col_sums == 0)
    if len(orphans):
        raise ValueError(
            f"anchors {orphans.tolist()} are claimed by no sample; "
            "re-run anchor generation or drop them"
        )
    B = Z.toarray() * (1.0 / np.sqrt(col_sums))[None, :]
    return AnchorGraph(B=B, theta=1.0 + n * mu, mu=mu)


def gf_anchored(anchor_graph, Y):
    """Anchored improved Green-function classifier.

    Applies the matrix inversion lemma to the dense system so that only the
    (m+1) x (m+1) core matrix is ever factorized:

        F = Y - [B 1] M^{-1} [B^T; 1^T] Y,
        M = [[B^T B - theta*I, B^T 1], [1^T B, n]].

    A positive 1/theta prefactor is dropped; it cannot change the argmax.
    """
    t0 = time.perf_counter()
    B = anchor_graph.B
    n, m = B.shape
    Yv = _y_values(Y)
    BtB = B.T @ B
    b1 = B.sum(axis=0)
    M = np.empty((m + 1, m + 1))
    M[:m, :m] = BtB
    M[np.diag_indices(m)] -= anchor_graph.theta
    M[:m, m] = b1
    M[m, :m] = b1
    M[m, m] = n
    rhs = np.vstack((B.T @ Yv, Yv.sum(axis=0)[None, :]))
    try:
        W = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        est = np.linalg.cond(M)
        raise ArithmeticError(
            f"singular inner matrix (condition estimate {est:.3e})"
        ) from None
    F = Yv - B @ W[:m] - W[m][None, :]
    seconds = time.perf_counter() - t0
    return SolverReport(
        F=F, method="gfa", seconds=seconds,
        params={"m": m, "mu": anchor_graph.mu, "theta": anchor_graph.theta},
    )
