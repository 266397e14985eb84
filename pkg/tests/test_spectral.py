import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from digft.basis import FourierBasis, constant_vector, identity_completion
from digft.graph import DirectedGraph, gen_scale_free, laplacian
from digft.soc import soc_basis
from digft.spectral import (
    adjacency_eigenbasis,
    column_metric,
    gft_forward,
    gft_inverse,
    laplacian_eigenbasis,
    order_by_variation,
)
from digft.variation import gqv

from oracles import random_undirected

PAIR = DirectedGraph.undirected(2, [(0, 1, 1.0)])
TRIANGLE = DirectedGraph(3, ((0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)))


def test_laplacian_pair():
    b = laplacian_eigenbasis(PAIR)
    assert np.allclose(b.info["eigenvalues"], [0.0, 2.0], atol=1e-12)
    assert np.allclose(b.X, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-12)
    assert np.array_equal(b.X[:, 0], constant_vector(2))


def test_laplacian_edgeless():
    b = laplacian_eigenbasis(DirectedGraph(3, ()))
    assert np.array_equal(b.X, identity_completion(3))
    assert np.all(b.info["eigenvalues"] == 0)


def test_laplacian_symmetrizes_directed_input_with_warning():
    with pytest.warns(UserWarning):
        b = laplacian_eigenbasis(TRIANGLE)
    assert b.orthonormality_error() <= 1e-10


def test_adjacency_pair_and_edgeless():
    b = adjacency_eigenbasis(PAIR)
    assert np.allclose(b.info["eigenvalues"], [1.0, -1.0])
    assert np.allclose(b.X, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-12)
    assert np.all(adjacency_eigenbasis(DirectedGraph(3, ())).info["eigenvalues"] == 0)


def test_adjacency_rejects_directed_input():
    with pytest.raises(ValueError):
        adjacency_eigenbasis(TRIANGLE)


def test_degenerate_eigenvalues_are_ordered_deterministically():
    g = DirectedGraph.undirected(4, [(i, j, 1.0) for i in range(4) for j in range(i + 1, 4)])
    a, b = laplacian_eigenbasis(g), laplacian_eigenbasis(g)
    assert np.array_equal(a.X, b.X)
    assert a.orthonormality_error() <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31))
def test_eigenbases_are_orthonormal_and_gqv_sorted(n, seed):
    g = random_undirected(np.random.default_rng(seed), n)
    lap = laplacian_eigenbasis(g)
    assert lap.orthonormality_error() <= 1e-10
    assert np.allclose(lap.column_variation, lap.info["eigenvalues"], atol=1e-9)
    assert np.all(np.diff(lap.info["eigenvalues"]) >= -1e-12)
    tr = np.trace(laplacian(g))
    assert abs(gqv(g, lap.X).sum() - tr) <= 1e-8 * max(1.0, tr)
    adj = adjacency_eigenbasis(g)
    assert adj.orthonormality_error() <= 1e-10
    assert np.all(np.diff(adj.info["eigenvalues"]) <= 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31))
def test_transform_round_trip_and_isometry(n, seed):
    rng = np.random.default_rng(seed)
    X = np.linalg.qr(rng.standard_normal((n, n)))[0]
    a, b = rng.standard_normal(n), rng.standard_normal(n)
    fa, fb = gft_forward(X, a), gft_forward(X, b)
    assert np.abs(gft_inverse(X, fa) - a).max() <= 1e-10
    assert abs(np.linalg.norm(fa) - np.linalg.norm(a)) <= 1e-10
    assert abs(fa @ fb - a @ b) <= 1e-10


def test_constant_signal_maps_to_first_coefficient():
    g = gen_scale_free(10, 2, 0)
    b = soc_basis(g)
    s_hat = gft_forward(b, np.full(10, 2.0))
    assert s_hat[0] == pytest.approx(2.0 * np.sqrt(10), abs=1e-10)
    assert np.abs(s_hat[1:]).max() <= 1e-10


def test_transform_dimension_mismatch():
    with pytest.raises(ValueError):
        gft_forward(np.eye(3), np.ones(4))
    with pytest.raises(ValueError):
        gft_inverse(np.eye(3), np.ones(2))


def test_order_by_variation():
    g = gen_scale_free(10, 3, 2)
    lap = laplacian_eigenbasis(g)
    assert np.array_equal(order_by_variation(lap, g, "GQV").X, lap.X)
    rev = FourierBasis(np.column_stack([lap.X[:, 0], lap.X[:, :0:-1]]), lap.column_variation, "laplacian")
    out = order_by_variation(rev, g, "gqv")
    assert np.array_equal(out.X, lap.X)
    assert out.info["ordered_by"] == "GQV"
    with pytest.raises(ValueError):
        column_metric(g, lap.X, "TV_X")
