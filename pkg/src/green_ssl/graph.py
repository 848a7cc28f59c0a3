"""kNN Gaussian similarity graphs, Laplacians, and connectivity analysis.

The Laplacian is kept implicit (degree vector plus sparse similarity); the
perturbed form adds uniform similarity mu between every pair and is applied
as a rank-one correction, never densified.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

DEFAULT_K = 20
DEFAULT_MU = 1e-5

DENSE_GUARD = 2048


@dataclass
class SparseSimilarity:
    """Symmetric nonnegative affinity with zero diagonal, weights in [0, 1]."""

    matrix: sparse.csr_matrix

    def __post_init__(self):
        m = sparse.csr_matrix(self.matrix)
        m.eliminate_zeros()
        self.matrix = m
        n1, n2 = m.shape
        if n1 != n2:
            raise ValueError("similarity matrix must be square")
        if m.nnz:
            if not np.all(np.isfinite(m.data)):
                raise ValueError("similarity contains non-finite weights")
            if m.data.min() < 0 or m.data.max() > 1:
                raise ValueError("similarity weights must lie in [0, 1]")
            if m.diagonal().any():
                raise ValueError("similarity diagonal must be zero")
            asym = abs(m - m.T)
            if asym.nnz and asym.max() > 0:
                raise ValueError("similarity must be exactly symmetric")

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def degree(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()


@dataclass
class Laplacian:
    """L = D - S, optionally perturbed to L* = L + n*mu*I - mu*1*1^T.

    The perturbed form corresponds to adding similarity mu between every
    pair of samples; it is applied implicitly.
    """

    sim: SparseSimilarity
    mu: float = 0.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")

    @property
    def form(self):
        return "perturbed" if self.mu > 0 else "plain"

    @property
    def n(self):
        return self.sim.n

    def apply(self, v):
        """Matrix product L @ v (or L* @ v) for a vector or n x c matrix."""
        v = np.asarray(v, dtype=np.float64)
        deg = self.sim.degree
        if v.ndim == 1:
            out = deg * v - self.sim.matrix @ v
            if self.mu > 0:
                out += self.n * self.mu * v - self.mu * v.sum()
        else:
            out = deg[:, None] * v - self.sim.matrix @ v
            if self.mu > 0:
                out += self.n * self.mu * v - self.mu * v.sum(axis=0)[None, :]
        return out

    def __matmul__(self, v):
        return self.apply(v)

    def to_dense(self, limit=DENSE_GUARD):
        """Materialize the operator; guarded because dense L is O(n^2) memory."""
        n = self.n
        if n > limit:
            raise MemoryError(
                f"refusing to densify a {n} x {n} Laplacian (limit {limit}); "
                "use the implicit operator instead"
            )
        dense = np.diag(self.sim.degree) - self.sim.matrix.toarray()
        if self.mu > 0:
            dense += n * self.mu * np.eye(n) - self.mu * np.ones((n, n))
        return dense


@dataclass
class Components:
    """Connected components with dense ids 1..count, ordered by smallest member."""

    count: int
    assignment: np.ndarray
    sizes: np.ndarray


def pairwise_sq_dists(a, b):
    """Squared Euclidean distances between the rows of a and b."""
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.maximum(sq, 0.0)


def _knn_edges(features, k, block=512):
    """Union-rule kNN edge list as an upper-triangular COO of squared distances.

    An edge (i, j) exists iff j is among i's k nearest or i among j's; ties at
    the k-th distance break toward the lower sample index. Distances are
    stored shifted by +1 so that zero-distance edges survive sparse storage.
    """
    n = features.shape[0]
    rows = np.repeat(np.arange(n), k)
    cols = np.empty(n * k, dtype=np.int64)
    vals = np.empty(n * k, dtype=np.float64)
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        d2 = pairwise_sq_dists(features[lo:hi], features)
        d2[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        cols[lo * k:hi * k] = order.ravel()
        vals[lo * k:hi * k] = np.take_along_axis(d2, order, axis=1).ravel() + 1.0
    directed = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    union = directed.maximum(directed.T)
    return sparse.triu(union, k=1).tocoo()


def _all_pairs_nonzero_stats(features, block=512):
    """Count, sum and sum of squares of all nonzero pairwise squared distances."""
    n = features.shape[0]
    count = 0
    total = 0.0
    total_sq = 0.0
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        d2 = pairwise_sq_dists(features[lo:hi], features)
        # keep only pairs (i, j) with global i < j
        mask = np.arange(n)[None, :] > np.arange(lo, hi)[:, None]
        vals = d2[mask]
        vals = vals[vals > 0]
        count += len(vals)
        total += vals.sum()
        total_sq += (vals * vals).sum()
    return count, total, total_sq


def build_knn_gaussian(ds, k=DEFAULT_K, bandwidth_scope="knn"):
    """Build the symmetrized kNN graph with Gaussian weights.

    The bandwidth 2*sigma^2 is the population variance of the nonzero
    squared distances, divided by the feature dimension d. By default the
    variance is taken over the retained kNN edges (each undirected edge
    once); ``bandwidth_scope="all"`` uses every pairwise distance instead.
    Zero variance falls back to the mean of the nonzero squared distances;
    if that is also zero the graph is degenerate.
    """
    n = ds.n
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if bandwidth_scope not in ("knn", "all"):
        raise ValueError(f"unknown bandwidth_scope {bandwidth_scope!r}")
    edges = _knn_edges(ds.features, k)
    d2 = edges.data - 1.0
    if bandwidth_scope == "knn":
        nz = d2[d2 > 0]
        count, total, total_sq = len(nz), nz.sum(), (nz * nz).sum()
    else:
        count, total, total_sq = _all_pairs_nonzero_stats(ds.features)
    if count == 0:
        raise ValueError("degenerate bandwidth: all points identical")
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    two_sigma_sq = var / ds.d
    if two_sigma_sq == 0.0:
        two_sigma_sq = mean  # fallback: single distinct distance
    weights = np.exp(-d2 / two_sigma_sq)
    upper = sparse.coo_matrix((weights, (edges.row, edges.col)), shape=(n, n))
    return SparseSimilarity((upper + upper.T).tocsr())


def laplacian(sim):
    """Plain graph Laplacian L = D - S as an implicit operator."""
    return Laplacian(sim, mu=0.0)


def perturbed_laplacian(lap, mu=DEFAULT_MU):
    """Perturb L by adding similarity mu between every pair of samples.

    The result represents L* = L + n*mu*I - mu*1*1^T; its null space is
    one-dimensional for any graph, which is what makes the improved solver
    behave on disconnected graphs.
    """
    if mu <= 0:
        raise ValueError("mu must be > 0")
    return Laplacian(lap.sim, mu=mu)


def connected_components(sim):
    """Union-find over edges with positive weight."""
    n = sim.n
    parent = np.arange(n)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:  # path compression
            parent[i], i = root, parent[i]
        return root

    coo = sparse.triu(sim.matrix, k=1).tocoo()
    for i, j in zip(coo.row, coo.col):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    roots = np.array([find(i) for i in range(n)])
    # dense ids 1..h in order of each component's smallest sample index
    _, assignment = np.unique(roots, return_inverse=True)
    assignment = assignment.astype(np.int64) + 1
    sizes = np.bincount(assignment)[1:]
    return Components(count=len(sizes), assignment=assignment, sizes=sizes)


def save_graph(sim, path):
    """Write the graph as sorted "i j w" triples with i < j (0-based)."""
    coo = sparse.triu(sim.matrix, k=1).tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for idx in order:
            fh.write(f"{coo.row[idx]} {coo.col[idx]} {repr(float(coo.data[idx]))}\n")


def load_graph(path, n=None):
    """Read an "i j w" triple file back into a SparseSimilarity.

    n defaults to one past the largest index seen; pass it explicitly if the
    graph has trailing isolated vertices.
    """
    rows, cols, vals = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            if len(toks) != 3:
                raise ValueError(f"line {lineno}: expected 'i j w', got {line!r}")
            i, j, w = int(toks[0]), int(toks[1]), float(toks[2])
            if not 0 <= i < j:
                raise ValueError(f"line {lineno}: need 0 <= i < j, got {i} {j}")
            rows.append(i)
            cols.append(j)
            vals.append(w)
    size = n if n is not None else (max(cols) + 1 if cols else 0)
    upper = sparse.coo_matrix((vals, (rows, cols)), shape=(size, size))
    return SparseSimilarity((upper + upper.T).tocsr())
