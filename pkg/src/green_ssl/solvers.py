"""Reference solvers on explicit graphs.

gf_pinv   - classic Green-function classifier F = L^+ Y via eigendecomposition
gf_gauss  - improved variant: solve (L + n*mu*I + eta*1*1^T) F = Y directly
llgc      - local and global consistency, F = (L + gamma*I)^{-1} Y
harmonic  - clamped harmonic function on the unlabeled block
baseline_1nn - nearest labeled sample

All dense solvers densify the Laplacian behind a memory guard; large graphs
belong to the anchored solver.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import graph as graphmod

SOLVER_DENSE_GUARD = 4096
DEFAULT_ETA = 1e6

ZERO_MODE_RTOL = 1e-9


@dataclass
class EigenSystem:
    """Full symmetric eigensystem of L, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero_mode_count: int


@dataclass
class SolverReport:
    """Soft labels plus method tag, wall time, and the parameters used."""

    F: np.ndarray
    method: str
    seconds: float
    params: dict = field(default_factory=dict)


def _dense_base(lap, guard=SOLVER_DENSE_GUARD):
    n = lap.n
    if n > guard:
        raise MemoryError(
            f"out-of-memory guard: dense solver limited to n <= {guard}, got n = {n}"
        )
    return np.diag(lap.sim.degree) - lap.sim.matrix.toarray()


def _y_values(Y):
    """Accept a LabelMatrix or a plain n x c array (for g-vector algebra)."""
    values = Y.values if hasattr(Y, "values") else Y
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    return values


def compute_eigensystem(lap):
    """Eigendecomposition of the plain Laplacian with zero modes identified.

    Eigenvalues below ZERO_MODE_RTOL times the largest count as zero modes;
    the count is cross-checked against the number of connected components
    and a mismatch is a hard error (it signals an unreliable decomposition).
    """
    if lap.form != "plain":
        raise ValueError("eigensystem is defined on the plain Laplacian")
    dense = _dense_base(lap)
    eigenvalues, eigenvectors = np.linalg.eigh(dense)
    tol = ZERO_MODE_RTOL * max(eigenvalues[-1], 0.0)
    zero_modes = int(np.sum(eigenvalues <= tol))
    h = graphmod.connected_components(lap.sim).count
    if zero_modes != h:
        raise ArithmeticError(
            f"zero-mode count {zero_modes} does not match component count {h}; "
            "eigendecomposition is numerically unreliable for this graph"
        )
    return EigenSystem(eigenvalues, eigenvectors, zero_modes)


def gf_pinv(lap, Y):
    """Classic Green-function classifier: F = L^+ Y with zero modes discarded.

    Works on disconnected graphs too, in which case the soft labels are
    forced to per-component zero column sums (the root of the method's
    trouble on such graphs).
    """
    if lap.form != "plain":
        raise ValueError("gf_pinv operates on the plain Laplacian; "
                         "use gf_gauss for the perturbed system")
    t0 = time.perf_counter()
    es = compute_eigensystem(lap)
    h = es.zero_mode_count
    Yv = _y_values(Y)
    U = es.eigenvectors[:, h:]
    F = U @ ((U.T @ Yv) / es.eigenvalues[h:, None])
    seconds = time.perf_counter() - t0
    return SolverReport(F=F, method="gf", seconds=seconds, params={"gamma": 1.0})


def gf_gauss(lap, Y, mu=None, eta=DEFAULT_ETA):
    """Improved Green-function classifier via a direct linear solve.

    Solves (L + n*mu*I + eta*1*1^T) F = Y with LU factorization (Gaussian
    elimination with partial pivoting) plus one step of iterative
    refinement. The rank-one eta term enforces zero column sums softly; mu
    connects all pairs so the system is well posed on any graph.
    """
    if mu is None:
        mu = lap.mu if lap.mu > 0 else graphmod.DEFAULT_MU
    if mu <= 0:
        raise ValueError("mu must be > 0")
    if eta <= 0:
        raise ValueError("eta must be > 0")
    t0 = time.perf_counter()
    n = lap.n
    A = _dense_base(lap)
    A[np.diag_indices_from(A)] += n * mu
    A += eta
    Yv = _y_values(Y)
    lu, piv = sla.lu_factor(A)
    F = sla.lu_solve((lu, piv), Yv)
    F += sla.lu_solve((lu, piv), Yv - A @ F)  # one refinement step
    if not np.all(np.isfinite(F)):
        raise ArithmeticError("singular system after pivoting")
    seconds = time.perf_counter() - t0
    return SolverReport(F=F, method="gfg", seconds=seconds, params={"mu": mu, "eta": eta})


def llgc(lap, Y, gamma=1.0):
    """Learning with local and global consistency: F = (L + gamma*I)^{-1} Y."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    t0 = time.perf_counter()
    A = _dense_base(lap)
    A[np.diag_indices_from(A)] += gamma
    Yv = _y_values(Y)
    F = np.linalg.solve(A, Yv)
    seconds = time.perf_counter() - t0
    return SolverReport(F=F, method="llgc", seconds=seconds, params={"gamma": gamma})


def harmonic(lap, Y, split):
    """Harmonic-function classifier: clamp labeled rows, relax the rest.

    Labeled rows keep their one-hot values; the unlabeled block solves
    (D_uu - S_uu) F_u = S_ul F_l. Every component must contain at least one
    labeled sample or the block is singular.
    """
    if Y.variant != "onehot":
        raise ValueError("harmonic requires the onehot label variant")
    t0 = time.perf_counter()
    n = lap.n
    comps = graphmod.connected_components(lap.sim)
    labeled = np.zeros(n, dtype=bool)
    labeled[split.labeled_indices] = True
    for cid in range(1, comps.count + 1):
        members = comps.assignment == cid
        if not labeled[members].any():
            raise ValueError(f"component {cid} has no labeled sample")
    S = lap.sim.matrix.toarray() if n <= SOLVER_DENSE_GUARD else None
    if S is None:
        raise MemoryError(
            f"out-of-memory guard: dense solver limited to n <= {SOLVER_DENSE_GUARD}, got n = {n}"
        )
    deg = lap.sim.degree
    u = ~labeled
    A_uu = np.diag(deg[u]) - S[np.ix_(u, u)]
    rhs = S[np.ix_(u, labeled)] @ Y.values[labeled]
    F = np.array(Y.values, dtype=np.float64)
    if u.any():
        F[u] = np.linalg.solve(A_uu, rhs)
    seconds = time.perf_counter() - t0
    return SolverReport(F=F, method="hf", seconds=seconds, params={})


def baseline_1nn(ds, split):
    """Give every sample the class of its nearest labeled sample.

    Labeled samples keep their own label; distance ties break toward the
    lower labeled sample index.
    """
    if len(split) < 1:
        raise ValueError("need at least one labeled sample")
    d2 = graphmod.pairwise_sq_dists(ds.features, ds.features[split.labeled_indices])
    nearest = np.argmin(d2, axis=1)  # first minimum = lowest labeled index
    pred = split.labels[nearest]
    pred[split.labeled_indices] = split.labels
    return pred
