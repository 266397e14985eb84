"""Fourier-basis container, convergence traces and shared post-processing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import DirectedGraph


@dataclass
class ConvergenceTrace:
    """Per-iteration solver record; ``columns`` fixes the CSV layout."""

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def append(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        if self.rows and values[0] <= self.rows[-1][0]:
            raise ValueError("trace indices must be strictly increasing")
        self.rows.append(tuple(values))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        out = [",".join(self.columns)]
        for r in self.rows:
            out.append(",".join(_fmt(v) for v in r))
        return "\n".join(out) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


@dataclass
class FourierBasis:
    X: np.ndarray
    column_variation: np.ndarray
    method: str
    trace: ConvergenceTrace | None = None
    converged: bool = True
    info: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def orthonormality_error(self) -> float:
        return float(np.abs(self.X.T @ self.X - np.eye(self.n)).max())

    def first_column_is_constant(self) -> bool:
        return bool(np.array_equal(self.X[:, 0], constant_vector(self.n)))


def constant_vector(n: int) -> np.ndarray:
    return np.full(n, 1.0 / np.sqrt(n))


def gram_schmidt(vectors: np.ndarray, count: int | None = None, drop_tol=1e-10) -> np.ndarray:
    """Orthonormalize columns in order, skipping (near-)dependent ones."""
    n, k = vectors.shape
    count = min(n, k) if count is None else count
    out = []
    for j in range(k):
        v = vectors[:, j].astype(float)
        for _ in range(2):
            for q in out:
                v = v - (q @ v) * q
        norm = np.linalg.norm(v)
        if norm > drop_tol:
            out.append(v / norm)
        if len(out) == count:
            break
    return np.column_stack(out) if out else np.zeros((n, 0))


def identity_completion(n: int) -> np.ndarray:
    """Gram-Schmidt of ``[b 1 | e_2 ... e_n]``."""
    M = np.eye(n)
    M[:, 0] = constant_vector(n)
    return gram_schmidt(M, n)


def random_orthonormal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded random orthonormal matrix whose first column is ``b 1``."""
    M = rng.standard_normal((n, n))
    M[:, 0] = constant_vector(n)
    Q, R = np.linalg.qr(M)
    Q = Q * np.sign(np.diag(R))
    Q[:, 0] = constant_vector(n)
    return Q


def initial_basis(n: int, mode: str, seed: int | None) -> np.ndarray:
    if mode == "identity":
        return identity_completion(n)
    if mode == "random":
        return random_orthonormal(n, np.random.default_rng(seed))
    raise ValueError(f"unknown init mode {mode!r}")


def fix_sign(x: np.ndarray, tol=1e-12) -> np.ndarray:
    """Flip ``x`` so that its first entry of magnitude above ``tol`` is positive."""
    nz = np.flatnonzero(np.abs(x) > tol)
    if nz.size and x[nz[0]] < 0:
        return -x
    return x


def orient_columns(X: np.ndarray, variation) -> np.ndarray:
    """Per column pick the sign with the smaller variation; ties use :func:`fix_sign`."""
    X = X.copy()
    for j in range(X.shape[1]):
        v_pos = variation(X[:, j])
        v_neg = variation(-X[:, j])
        if np.isclose(v_pos, v_neg, rtol=1e-12, atol=1e-14):
            X[:, j] = fix_sign(X[:, j])
        elif v_neg < v_pos:
            X[:, j] = -X[:, j]
    return X


def finalize_basis(g: DirectedGraph, P: np.ndarray, variation) -> tuple[np.ndarray, np.ndarray]:
    """Pin column 1 to ``b 1``, re-orthonormalize, orient and sort the rest.

    The trailing block is projected off the constant direction and replaced
    by its nearest matrix with orthonormal columns, which moves it by the
    order of its orthonormality defect.
    """
    n = g.n
    b1 = constant_vector(n)
    Q = P[:, 1:] - np.outer(b1, b1 @ P[:, 1:])
    if Q.shape[1]:
        U, _, Vt = np.linalg.svd(Q, full_matrices=False)
        Q = U @ Vt
        Q = Q - np.outer(b1, b1 @ Q)
    X = np.column_stack([b1, Q])
    X[:, 1:] = orient_columns(X[:, 1:], variation)
    values = np.array([variation(X[:, j]) for j in range(n)])
    order = np.concatenate([[0], 1 + np.argsort(values[1:], kind="stable")])
    return X[:, order], values[order]
