import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from digft.basis import (
    ConvergenceTrace,
    FourierBasis,
    constant_vector,
    finalize_basis,
    fix_sign,
    gram_schmidt,
    identity_completion,
    initial_basis,
    orient_columns,
    random_orthonormal,
)
from digft.graph import DirectedGraph
from digft.variation import gdv


def test_trace_indices_strictly_increase():
    tr = ConvergenceTrace(("iteration", "value"))
    tr.append(1, 0.5)
    tr.append(2, 0.25)
    with pytest.raises(ValueError):
        tr.append(2, 0.1)
    with pytest.raises(ValueError):
        tr.append(3)
    assert tr.column("value").tolist() == [0.5, 0.25]
    assert tr.to_csv() == "iteration,value\n1,0.5\n2,0.25\n"


@pytest.mark.parametrize("n", [1, 2, 5, 17])
def test_identity_completion(n):
    Q = identity_completion(n)
    assert Q.shape == (n, n)
    assert np.abs(Q.T @ Q - np.eye(n)).max() < 1e-12
    assert np.allclose(Q[:, 0], constant_vector(n))


@settings(max_examples=30)
@given(st.integers(2, 12), st.integers(0, 2**31))
def test_random_orthonormal_is_seeded_and_pinned(n, seed):
    Q = random_orthonormal(n, np.random.default_rng(seed))
    assert np.array_equal(Q[:, 0], constant_vector(n))
    assert np.abs(Q.T @ Q - np.eye(n)).max() < 1e-12
    assert np.array_equal(Q, initial_basis(n, "random", seed))


def test_initial_basis_rejects_unknown_mode():
    with pytest.raises(ValueError):
        initial_basis(3, "zeros", 0)


def test_gram_schmidt_skips_dependent_columns():
    V = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
    Q = gram_schmidt(V)
    assert Q.shape == (2, 2)
    assert np.allclose(Q, np.eye(2))


def test_fix_sign():
    assert fix_sign(np.array([0.0, -1.0, 2.0])).tolist() == [0.0, 1.0, -2.0]
    assert fix_sign(np.array([1e-14, 1.0])).tolist() == [1e-14, 1.0]


def test_orient_columns_prefers_lower_variation():
    g = DirectedGraph(2, ((0, 1, 1.0),))
    x = np.array([[1.0], [-1.0]]) / np.sqrt(2)
    out = orient_columns(x, lambda v: gdv(g, v))
    assert out[0, 0] < 0 and gdv(g, out[:, 0]) == 0.0


def test_finalize_pins_orients_and_sorts():
    g = DirectedGraph(3, ((0, 1, 1.0), (1, 2, 1.0)))
    rng = np.random.default_rng(0)
    P = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    X, values = finalize_basis(g, P, lambda v: gdv(g, v))
    b = FourierBasis(X, values, "test")
    assert b.first_column_is_constant()
    assert b.orthonormality_error() < 1e-12
    assert np.all(np.diff(values[1:]) >= 0)
    assert np.allclose(values, gdv(g, X))
