"""Similarity graph construction, Laplacian operators, connectivity."""

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse.csgraph import connected_components as scipy_components

from green_ssl.dataio import Dataset, gen_two_ring
from green_ssl.graph import (
    DEFAULT_K,
    DEFAULT_MU,
    Laplacian,
    SparseSimilarity,
    _knn_edges,
    build_knn_gaussian,
    connected_components,
    laplacian,
    load_graph,
    perturbed_laplacian,
    save_graph,
)


def _heterocloud(n, d, c, seed):
    # per-sample lognormal radial scaling keeps the kNN distance spread wide,
    # which the variance-based bandwidth needs to produce usable weights
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d)) * rng.lognormal(0.0, 1.0, size=(n, 1))
    return Dataset(x, 1 + np.arange(n) % c, c)


def test_defaults():
    assert DEFAULT_K == 20
    assert DEFAULT_MU == 1e-5


def test_similarity_validation():
    with pytest.raises(ValueError, match="square"):
        SparseSimilarity(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        SparseSimilarity([[0.0, np.inf], [np.inf, 0.0]])
    with pytest.raises(ValueError, match=r"lie in \[0, 1\]"):
        SparseSimilarity([[0.0, 1.5], [1.5, 0.0]])
    with pytest.raises(ValueError, match="diagonal"):
        SparseSimilarity([[0.5, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError, match="symmetric"):
        SparseSimilarity([[0.0, 0.3], [0.2, 0.0]])
    sim = SparseSimilarity([[0.0, 0.5], [0.5, 0.0]])
    np.testing.assert_allclose(sim.degree, [0.5, 0.5])


def test_knn_weights_three_points_on_a_line():
    # 1-D points 0, 1, 3 with k=1: edges (0,1) and (1,2); squared distances
    # {1, 4} give bandwidth 2.25 (population variance over the edge set)
    ds = Dataset([[0.0], [1.0], [3.0]], [1, 2, 1], 2)
    sim = build_knn_gaussian(ds, k=1)
    s = sim.matrix.toarray()
    assert s[0, 2] == 0.0
    np.testing.assert_allclose(s[0, 1], 0.6411803884299546, rtol=1e-12)
    np.testing.assert_allclose(s[1, 2], 0.1690133154060661, rtol=1e-12)
    np.testing.assert_array_equal(s, s.T)


def test_knn_bandwidth_fallback_and_degenerate():
    # a single distinct distance has zero variance; the bandwidth falls back
    # to the mean squared distance, so the lone weight is exp(-1)
    pair = Dataset([[0.0], [2.0]], [1, 2], 2)
    sim = build_knn_gaussian(pair, k=1)
    np.testing.assert_allclose(sim.matrix[0, 1], np.exp(-1.0), rtol=1e-12)

    same = Dataset(np.ones((4, 2)), [1, 1, 2, 2], 2)
    with pytest.raises(ValueError, match="degenerate bandwidth"):
        build_knn_gaussian(same, k=1)


def test_knn_argument_errors():
    ds = _heterocloud(10, 2, 2, seed=0)
    with pytest.raises(ValueError, match="need 1 <= k < n"):
        build_knn_gaussian(ds, k=10)
    with pytest.raises(ValueError, match="need 1 <= k < n"):
        build_knn_gaussian(ds, k=0)
    with pytest.raises(ValueError, match="bandwidth_scope"):
        build_knn_gaussian(ds, k=3, bandwidth_scope="everything")


def test_knn_tie_breaks_toward_lower_index():
    # point 0 is equidistant from points 1 and 2; with k=1 it must pick
    # index 1, and nobody else selects that pair, so edge (0,1) only exists
    # if the tie broke low
    feats = np.array([[0.0], [1.0], [-1.0], [1.4]])
    edges = _knn_edges(feats, 1)
    pairs = set(zip(edges.row.tolist(), edges.col.tolist()))
    assert (0, 1) in pairs
    assert pairs == {(0, 1), (0, 2), (1, 3)}


def test_knn_scope_all_changes_only_the_bandwidth():
    ds = _heterocloud(40, 3, 2, seed=1)
    a = build_knn_gaussian(ds, k=5, bandwidth_scope="knn")
    b = build_knn_gaussian(ds, k=5, bandwidth_scope="all")
    assert (a.matrix != 0).toarray().tolist() == (b.matrix != 0).toarray().tolist()
    assert abs(a.matrix - b.matrix).max() > 0


def test_laplacian_small_cases():
    lap = laplacian(SparseSimilarity([[0.0, 1.0], [1.0, 0.0]]))
    assert lap.form == "plain"
    np.testing.assert_allclose(lap.to_dense(), [[1.0, -1.0], [-1.0, 1.0]])

    empty = laplacian(SparseSimilarity(sparse.csr_matrix((3, 3))))
    np.testing.assert_array_equal(empty.to_dense(), np.zeros((3, 3)))


def test_laplacian_row_and_column_sums():
    ds = _heterocloud(60, 3, 2, seed=2)
    lap = laplacian(build_knn_gaussian(ds, k=6))
    ones = np.ones(60)
    np.testing.assert_allclose(lap @ ones, 0.0, atol=1e-10)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(60)
    assert abs((lap @ v).sum()) <= 1e-9 * np.linalg.norm(v)


def test_laplacian_dense_guard():
    big = laplacian(SparseSimilarity(sparse.csr_matrix((2100, 2100))))
    with pytest.raises(MemoryError, match="2100 x 2100"):
        big.to_dense()
    assert big.to_dense(limit=2100).shape == (2100, 2100)


def test_perturbed_two_isolated_points():
    lap = laplacian(SparseSimilarity(sparse.csr_matrix((2, 2))))
    star = perturbed_laplacian(lap, mu=0.1)
    assert star.form == "perturbed"
    np.testing.assert_allclose(star.to_dense(), [[0.1, -0.1], [-0.1, 0.1]], atol=1e-15)
    np.testing.assert_allclose(np.linalg.eigvalsh(star.to_dense()), [0.0, 0.2], atol=1e-12)
    with pytest.raises(ValueError, match="mu must be > 0"):
        perturbed_laplacian(lap, mu=0.0)


def test_perturbed_apply_matches_dense():
    ds = _heterocloud(150, 4, 3, seed=4)
    star = perturbed_laplacian(laplacian(build_knn_gaussian(ds, k=8)))
    dense = star.to_dense()
    rng = np.random.default_rng(5)
    v = rng.standard_normal(150)
    np.testing.assert_allclose(star.apply(v), dense @ v, atol=1e-10)
    V = rng.standard_normal((150, 3))
    np.testing.assert_allclose(star.apply(V), dense @ V, atol=1e-10)


def test_perturbed_spectrum_shift():
    # eigenvalues of the perturbed operator: one exact zero, the other h-1
    # zero modes move to n*mu, every nonzero eigenvalue shifts by n*mu
    mu = 1e-3
    for seed, build in ((6, "one"), (7, "two")):
        if build == "one":
            ds = _heterocloud(36, 3, 2, seed)
            k = 5
        else:
            a = _heterocloud(20, 3, 2, seed)
            b = _heterocloud(20, 3, 2, seed + 50)
            shifted = b.features.copy()
            shifted[:, 0] += 300.0
            ds = Dataset(np.vstack((a.features, shifted)), [1, 2] * 20, 2)
            k = 4
        sim = build_knn_gaussian(ds, k=k)
        h = connected_components(sim).count
        n = ds.n
        plain = np.linalg.eigvalsh(laplacian(sim).to_dense())
        nonzero = plain[h:]
        expected = np.sort(np.concatenate(([0.0], np.full(h - 1, n * mu), nonzero + n * mu)))
        got = np.linalg.eigvalsh(perturbed_laplacian(laplacian(sim), mu).to_dense())
        np.testing.assert_allclose(got, expected, atol=1e-8)
        if build == "two":
            assert h == 2


def test_components_hand_cases():
    chain = sparse.diags([np.full(4, 0.5)], [1], shape=(5, 5))
    comps = connected_components(SparseSimilarity(chain + chain.T))
    assert comps.count == 1 and comps.sizes.tolist() == [5]

    isolated = connected_components(SparseSimilarity(sparse.csr_matrix((4, 4))))
    assert isolated.count == 4
    assert isolated.assignment.tolist() == [1, 2, 3, 4]

    pairs = np.zeros((4, 4))
    pairs[0, 3] = pairs[3, 0] = 0.9
    pairs[1, 2] = pairs[2, 1] = 0.9
    comps = connected_components(SparseSimilarity(pairs))
    # ids follow each component's smallest sample index
    assert comps.assignment.tolist() == [1, 2, 2, 1]


def test_components_two_rings():
    ds = gen_two_ring(500, 1000, 10.0, 25.0, 0.4, seed=0)
    comps = connected_components(build_knn_gaussian(ds, k=20))
    assert comps.count == 2
    assert sorted(comps.sizes.tolist()) == [500, 1000]
    # the rings are the components
    assert len(np.unique(comps.assignment[ds.truth == 1])) == 1
    assert len(np.unique(comps.assignment[ds.truth == 2])) == 1


def test_components_match_scipy():
    a = _heterocloud(90, 3, 2, seed=8)
    b = _heterocloud(90, 3, 2, seed=9)
    shifted = b.features.copy()
    shifted[:, 0] += 400.0
    ds = Dataset(np.vstack((a.features, shifted)), [1, 2] * 90, 2)
    sim = build_knn_gaussian(ds, k=4)
    mine = connected_components(sim)
    count, labels = scipy_components(sim.matrix, directed=False)
    assert mine.count == count
    same_mine = mine.assignment[:, None] == mine.assignment[None, :]
    same_scipy = labels[:, None] == labels[None, :]
    np.testing.assert_array_equal(same_mine, same_scipy)
    assert mine.sizes.sum() == ds.n


def test_graph_save_load_round_trip(tmp_path):
    ds = _heterocloud(50, 3, 2, seed=10)
    sim = build_knn_gaussian(ds, k=5)
    path = tmp_path / "graph.txt"
    save_graph(sim, path)
    lines = path.read_text().splitlines()
    first = lines[0].split()
    assert len(first) == 3 and int(first[0]) < int(first[1])
    back = load_graph(path, n=50)
    assert abs(sim.matrix - back.matrix).max() == 0.0

    inferred = load_graph(path)
    assert inferred.n <= 50  # trailing isolated vertices need an explicit n


def test_graph_load_tolerates_comments(tmp_path):
    path = tmp_path / "graph.txt"
    path.write_text("# weights\n\n0 1 0.5\n")
    sim = load_graph(path)
    assert sim.n == 2 and sim.matrix[0, 1] == 0.5
    path.write_text("1 0 0.5\n")
    with pytest.raises(ValueError, match="need 0 <= i < j"):
        load_graph(path)
    path.write_text("0 1\n")
    with pytest.raises(ValueError, match="expected 'i j w'"):
        load_graph(path)
