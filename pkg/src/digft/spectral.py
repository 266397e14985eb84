"""Eigenvector bases, the forward/inverse transform and frequency ordering."""

from __future__ import annotations

import warnings

import numpy as np

from .basis import FourierBasis, constant_vector, fix_sign, identity_completion
from .graph import DirectedGraph, laplacian, symmetrize
from .variation import gav, gdv, gqv, tv_laplacian

METRICS = {
    "GDV": gdv,
    "GAV": gav,
    "GQV": gqv,
    "TV_L": tv_laplacian,
}


def _tie_break(vals: np.ndarray, V: np.ndarray, descending: bool, tol=1e-10) -> np.ndarray:
    """Order by eigenvalue; inside a degenerate cluster order vectors lexicographically."""
    key = -vals if descending else vals
    order = np.argsort(key, kind="stable")
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and abs(key[order[j]] - key[order[i]]) <= tol * max(1.0, abs(key[order[i]])):
            j += 1
        block = list(order[i:j])
        # lexicographic on the sign-fixed vectors, largest first
        block.sort(key=lambda c: tuple(-np.round(V[:, c], 12)))
        out += block
        i = j
    return np.array(out, dtype=int)


def _canonical_eigh(M: np.ndarray, descending: bool):
    vals, V = np.linalg.eigh(M)
    V = np.column_stack([fix_sign(V[:, j]) for j in range(V.shape[1])])
    order = _tie_break(vals, V, descending)
    return vals[order], V[:, order]


def laplacian_eigenbasis(g: DirectedGraph) -> FourierBasis:
    """Eigenvectors of ``L`` by ascending eigenvalue.

    Directed inputs are symmetrized with a warning.  On connected graphs
    the first column is replaced by ``+b 1`` exactly (it spans the
    null space); an edgeless graph gets the identity completion.
    """
    if not g.is_symmetric:
        warnings.warn("laplacian_eigenbasis: symmetrizing a directed graph", stacklevel=2)
        g = symmetrize(g)
    n = g.n
    if g.num_edges == 0:
        X = identity_completion(n)
        return FourierBasis(X, np.zeros(n), "laplacian", info={"eigenvalues": np.zeros(n)})
    vals, V = _canonical_eigh(laplacian(g), descending=False)
    b1 = constant_vector(n)
    if vals[1] > 1e-10 * max(1.0, vals[-1]) and abs(abs(V[:, 0] @ b1) - 1) < 1e-8:
        V[:, 0] = b1
    return FourierBasis(V, gqv(g, V), "laplacian", info={"eigenvalues": vals})


def adjacency_eigenbasis(g: DirectedGraph) -> FourierBasis:
    """Eigenvectors of ``A`` by descending eigenvalue (large eigenvalue = low frequency)."""
    if not g.is_symmetric:
        raise ValueError("adjacency eigenbasis needs an undirected (symmetric) graph")
    vals, V = _canonical_eigh(g.adjacency, descending=True)
    return FourierBasis(V, vals.copy(), "adjacency", info={"eigenvalues": vals})


def gft_forward(basis: FourierBasis | np.ndarray, s) -> np.ndarray:
    X = basis.X if isinstance(basis, FourierBasis) else np.asarray(basis, dtype=float)
    s = np.asarray(s, dtype=float)
    if s.shape[0] != X.shape[0]:
        raise ValueError(f"signal of length {s.shape[0]} for a basis of size {X.shape[0]}")
    return X.T @ s


def gft_inverse(basis: FourierBasis | np.ndarray, s_hat) -> np.ndarray:
    X = basis.X if isinstance(basis, FourierBasis) else np.asarray(basis, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    if s_hat.shape[0] != X.shape[1]:
        raise ValueError(f"spectrum of length {s_hat.shape[0]} for a basis of size {X.shape[1]}")
    return X @ s_hat


def column_metric(g: DirectedGraph, X: np.ndarray, metric: str) -> np.ndarray:
    try:
        f = METRICS[metric.upper()]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(METRICS)}") from None
    return np.array([f(g, X[:, j]) for j in range(X.shape[1])])


def order_by_variation(basis: FourierBasis, g: DirectedGraph, metric: str = "GDV") -> FourierBasis:
    """Stable re-sort of columns 2..n by ``metric``; column 1 stays put."""
    values = column_metric(g, basis.X, metric)
    order = np.concatenate([[0], 1 + np.argsort(values[1:], kind="stable")])
    info = dict(basis.info, ordered_by=metric.upper())
    return FourierBasis(basis.X[:, order], values[order], basis.method, basis.trace, basis.converged, info)
