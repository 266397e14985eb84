"""Optimization kernels shared by the basis solvers.

The workhorse is the proximal map of the directed variation,

    argmin_x  GDV(x) + mu/2 ||x - t||^2     (optionally with C^T x = 0),

solved by ADMM on the consensus split ``z = E x`` where ``E`` is the
edge-difference operator.  Each ADMM run is followed by an active-set
polish: edges whose split variable sits exactly at the hinge kink are
contracted, and the resulting small quadratic is solved in closed form.
When the sign pattern found by ADMM is right the polished point is the
exact minimizer, which the outer solvers rely on for their stopping rules.
If ADMM hits its iteration cap, the box-constrained dual is solved
exactly by bounded-variable least squares instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.optimize import lsq_linear
from scipy.sparse.csgraph import connected_components

from .graph import DirectedGraph


@dataclass(frozen=True)
class ProxGdvConfig:
    sigma: float = 1.0
    max_iter: int = 2000
    tol: float = 1e-8
    relaxation: float = 1.0
    polish: bool = True
    polish_every: int = 4
    exact_fallback: bool = True  # solve the dual exactly for columns ADMM leaves uncertified

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 1.0 <= self.relaxation < 2.0:
            raise ValueError("relaxation must lie in [1, 2)")


class ProxWarning(RuntimeWarning):
    pass


def hinge_prox(v, lam):
    """Proximal map of ``z -> lam * max(z, 0)`` (elementwise, broadcasting)."""
    v = np.asarray(v, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("lam must be nonnegative")
    out = np.where(v > lam, v - lam, np.minimum(v, 0.0))
    return float(out) if out.ndim == 0 else out


class EdgeDifferenceOperator:
    """Sparse map ``x -> (x_src - x_dst)_e`` with the edge weights attached."""

    def __init__(self, g: DirectedGraph):
        self.n = g.n
        self.m = g.num_edges
        self.src = g.src
        self.dst = g.dst
        self.weights = g.weights
        rows = np.repeat(np.arange(self.m), 2)
        cols = np.column_stack([self.src, self.dst]).ravel()
        vals = np.tile([1.0, -1.0], self.m)
        self.matrix = sp.csr_matrix((vals, (rows, cols)), shape=(self.m, self.n))
        self.matrix_t = self.matrix.T.tocsr()
        self.gram = (self.matrix_t @ self.matrix).toarray()

    def __call__(self, x):
        return self.matrix @ x

    def adjoint(self, y):
        return self.matrix_t @ y

    def variation(self, x):
        """GDV of ``x`` (per column when ``x`` is a matrix)."""
        d = self.matrix @ x
        w = self.weights if d.ndim == 1 else self.weights[:, None]
        return (w * np.maximum(d, 0.0)).sum(axis=0)


def complement_basis(prefix) -> np.ndarray | None:
    """Orthonormal basis of the orthogonal complement of ``span(prefix)``."""
    if prefix is None:
        return None
    C = np.asarray(prefix, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    if C.shape[1] == 0:
        return None
    return sla.null_space(C.T, rcond=1e-10)


@dataclass
class ProxResult:
    x: np.ndarray
    dual: np.ndarray
    iterations: int
    converged: bool
    polished: np.ndarray


class GdvProx:
    """Batched proximal solver for the directed variation on a fixed graph.

    Columns of the target are independent problems sharing ``mu``.  ADMM
    state is kept between calls and reused as a warm start whenever the
    number of columns matches, which is what the outer iterations of the
    basis solvers need.
    """

    def __init__(self, g: DirectedGraph, cfg: ProxGdvConfig | None = None, prefix=None):
        self.g = g
        self.cfg = cfg or ProxGdvConfig()
        self.E = EdgeDifferenceOperator(g)
        self._Ed = self.E.matrix.toarray()
        self.N = complement_basis(prefix)
        self.C = None if self.N is None else np.asarray(prefix, dtype=float).reshape(g.n, -1)
        self.sigma = self.cfg.sigma
        self._ops_key = None
        self._ops = None
        self._Z = None
        self._U = None
        self._last_failure = 0
        if self.N is None:
            self._gram = self.E.gram
        else:
            self._gram = self.N.T @ self.E.gram @ self.N

    def reset(self):
        self._Z = self._U = None
        self.sigma = self.cfg.sigma

    def _operators(self, mu):
        """``x = K1 t + K2 (z - u)`` solves the ADMM x-update."""
        key = (mu, self.sigma)
        if key != self._ops_key:
            M = self.sigma * self._gram
            M[np.diag_indices_from(M)] += mu
            Minv = sla.cho_solve(sla.cho_factor(M), np.eye(M.shape[0]))
            Et = self._Ed.T
            if self.N is None:
                K1 = mu * Minv
                K2 = self.sigma * Minv @ Et
            else:
                K1 = mu * self.N @ Minv @ self.N.T
                K2 = self.sigma * self.N @ Minv @ (self.N.T @ Et)
            self._ops = (K1, K2, self._Ed @ K2)
            self._ops_key = key
        return self._ops

    def __call__(self, target, mu: float) -> ProxResult:
        if not mu > 0:
            raise ValueError("mu must be positive")
        T = np.asarray(target, dtype=float)
        vector = T.ndim == 1
        if vector:
            T = T[:, None]
        if self.N is not None:
            # the minimizer only sees the feasible part of the target
            T = self.N @ (self.N.T @ T)
        k = T.shape[1]
        m = self.E.m
        if m == 0:
            res = ProxResult(T.copy(), np.zeros((0, k)), 0, True, np.ones(k, dtype=bool))
            return self._squeeze(res, vector)

        cfg = self.cfg
        Ed = self._Ed
        if self._Z is None or self._Z.shape != (m, k):
            self.sigma = cfg.sigma * mu
            Z = Ed @ T
            U = np.zeros((m, k))
        else:
            Z, U = self._Z, self._U
        w = self.E.weights[:, None]
        relax = cfg.relaxation
        converged = certified = False
        it = 0
        K1, K2, EK2 = self._operators(mu)
        XT = K1 @ T
        EXT = Ed @ XT
        for it in range(1, cfg.max_iter + 1):
            EX = EXT + EK2 @ (Z - U)
            EXh = EX if relax == 1.0 else relax * EX + (1.0 - relax) * Z
            Z_old = Z
            V = EXh + U
            thr = w / self.sigma
            Z = np.where(V > thr, V - thr, np.minimum(V, 0.0))
            U = V - Z
            r = np.abs(EX - Z).max()
            s = self.sigma * np.abs(Ed.T @ (Z - Z_old)).max()
            if r <= cfg.tol and s <= cfg.tol:
                converged = True
                break
            if cfg.polish and it % cfg.polish_every == 0:
                cand, ok = self._polish(XT + K2 @ (Z - U), Z, T, mu)
                if ok.all() and self._certify(cand, Z, self.sigma * U, T, mu, first_failure=True).all():
                    converged = certified = True
                    break
            if it % 10 == 0 and (r > 10 * s or s > 10 * r):
                if r > 10 * s:
                    self.sigma *= 2.0
                    U = U / 2.0
                else:
                    self.sigma /= 2.0
                    U = U * 2.0
                K1, K2, EK2 = self._operators(mu)
                XT = K1 @ T
                EXT = Ed @ XT
        self._Z, self._U = Z, U
        dual = self.sigma * U
        X = XT + K2 @ (Z - U)
        polished = np.zeros(k, dtype=bool)
        if cfg.polish:
            X, polished = self._polish(X, Z, T, mu)
        if cfg.exact_fallback and not certified:
            todo = ~self._certify(X, Z, dual, T, mu)
            if todo.any():
                X[:, todo], ok = self._dual_fallback(X[:, todo], T[:, todo], mu)
                converged |= ok
        if not converged:
            warnings.warn(
                f"prox_gdv: ADMM stopped after {it} iterations (residuals {r:.2e}, {s:.2e})",
                ProxWarning,
                stacklevel=2,
            )
        return self._squeeze(ProxResult(X, dual, it, converged, polished), vector)

    @staticmethod
    def _squeeze(res, vector):
        if vector:
            res.x = res.x[:, 0]
            res.dual = res.dual[:, 0]
        return res

    def objective(self, X, T, mu):
        return self.E.variation(X) + 0.5 * mu * ((X - T) ** 2).sum(axis=0)

    def _certify(self, X, Z, dual, T, mu, slack=1e-11, first_failure=False):
        """Check optimality of ``X`` column by column.

        Multipliers are fixed off the kink; on kink edges the ADMM dual is
        moved by the least-norm correction that makes stationarity exact.
        A column is certified when the corrected multipliers stay in
        ``[0, w]``.  With ``first_failure`` the scan stops at the first
        uncertified column, starting from the one that failed last time.
        """
        k = X.shape[1]
        D = self._Ed @ X
        ok = np.zeros(k, dtype=bool)
        order = np.arange(k)
        if first_failure:
            order = np.roll(order, -(self._last_failure % k))
        for j in order:
            ok[j] = self._certify_column(X[:, j], Z[:, j], D[:, j], dual[:, j], T[:, j], mu, slack)
            if first_failure and not ok[j]:
                self._last_failure = int(j)
                break
        return ok

    def _certify_column(self, x, z, d, dual, t, mu, slack):
        w = self.E.weights
        Ed = self._Ed
        kink = z == 0.0
        pos = z > 0.0
        if (
            np.abs(d[kink]).max(initial=0.0) > 1e-12
            or d[pos].min(initial=0.0) < -1e-12
            or d[~pos & ~kink].max(initial=0.0) > 1e-12
        ):
            return False
        lam = np.where(pos, w, 0.0)
        b = -mu * (x - t) - Ed[~kink].T @ lam[~kink]
        A = Ed[kink].T
        start = dual[kink]
        if self.C is not None:
            A = np.hstack([A, self.C])
            start = np.concatenate([start, -self.C.T @ (b - A[:, : kink.sum()] @ start)])
        resid = b - A @ start
        if np.abs(resid).max() > 1e-14:
            start = start + np.linalg.lstsq(A, resid, rcond=None)[0]
        if np.abs(A @ start - b).max() > 1e-10 * (1.0 + np.abs(b).max()):
            return False
        lk = start[: kink.sum()]
        if np.all(lk >= -slack) and np.all(lk <= w[kink] + slack):
            return True
        # multipliers on redundant kink edges are not unique; search the box directly
        lo = np.concatenate([np.zeros(kink.sum()), np.full(A.shape[1] - kink.sum(), -np.inf)])
        hi = np.concatenate([w[kink], np.full(A.shape[1] - kink.sum(), np.inf)])
        sol = lsq_linear(A, b, bounds=(lo, hi), method="bvls", tol=1e-14)
        return bool(np.abs(A @ sol.x - b).max() <= 1e-10 * (1.0 + np.abs(b).max()))

    def _dual_fallback(self, X, T, mu):
        """Solve the box-constrained dual exactly when ADMM stalls.

        With ``lam`` in ``[0, w]`` minimizing ``||N^T (E^T lam - mu t)||`` the
        primal point is ``x = N N^T (t - E^T lam / mu)``.  This is an
        active-set method, so slow but exact; it is kept for the stalls
        that show up when the feasible complement is small.
        """
        Et = self._Ed.T
        w = self.E.weights
        A = Et if self.N is None else self.N.T @ Et
        out = X.copy()
        ok = True
        for j in range(X.shape[1]):
            t = T[:, j]
            b = mu * (t if self.N is None else self.N.T @ t)
            lam = lsq_linear(A, b, bounds=(np.zeros_like(w), w), method="bvls", tol=1e-14).x
            x = t - Et @ lam / mu
            if self.N is not None:
                x = self.N @ (self.N.T @ x)
            cand = x[:, None]
            if self.objective(cand, T[:, j : j + 1], mu)[0] <= self.objective(X[:, j : j + 1], T[:, j : j + 1], mu)[0] + 1e-12:
                out[:, j] = x
            ok &= prox_certificate(self.g, out[:, j], t, mu, prefix=self.C) <= 1e-9 * (1.0 + mu * np.abs(t).max())
        return out, ok

    def _polish(self, X, Z, T, mu):
        n, k = X.shape
        src, dst, w = self.E.src, self.E.dst, self.E.weights
        # one block-diagonal graph holds the kink edges of every column
        e_idx, cols = np.nonzero(Z == 0.0)
        adj = sp.coo_matrix(
            (np.ones(e_idx.size), (src[e_idx] + cols * n, dst[e_idx] + cols * n)),
            shape=(n * k, n * k),
        )
        ng, labels = connected_components(adj, directed=False)
        labels = labels.reshape(k, n).T  # node x column
        W = np.where(Z > 0.0, w[:, None], 0.0)
        coef = self.E.adjoint(W)  # linear term of GDV on the current sign pattern
        flat = labels.ravel()
        counts = np.bincount(flat, minlength=ng).astype(float)
        tsum = np.bincount(flat, T.ravel(), ng)
        csum = np.bincount(flat, np.asarray(coef).ravel(), ng)
        if self.C is None:
            cand = ((tsum - csum / mu) / counts)[labels]
        else:
            cand = np.empty_like(X)
            for j in range(k):
                lab, inv = np.unique(labels[:, j], return_inverse=True)
                G = np.zeros((n, lab.size))
                G[np.arange(n), inv] = 1.0
                A = self.C.T @ G
                p = A.shape[0]
                kkt = np.block([[mu * np.diag(counts[lab]), A.T], [A, np.zeros((p, p))]])
                rhs = np.concatenate([mu * tsum[lab] - csum[lab], np.zeros(p)])
                cand[:, j] = (G @ np.linalg.lstsq(kkt, rhs, rcond=None)[0][: lab.size])
        base = self.objective(X, T, mu)
        obj = self.objective(cand, T, mu)
        ok = obj <= base + 1e-13 * (1.0 + np.abs(base))
        if self.C is not None:
            ok &= np.abs(self.C.T @ cand).max(axis=0) <= 1e-10
        out = np.where(ok[None, :], cand, X)
        return out, ok


def prox_gdv(g: DirectedGraph, target, mu: float, cfg: ProxGdvConfig | None = None) -> np.ndarray:
    """``argmin_x GDV(x) + mu/2 ||x - target||^2`` (per column for matrices)."""
    return GdvProx(g, cfg)(target, mu).x


def prox_gdv_constrained(
    g: DirectedGraph, target, mu: float, prefix, cfg: ProxGdvConfig | None = None
) -> np.ndarray:
    """As :func:`prox_gdv`, restricted to vectors orthogonal to ``prefix``."""
    return GdvProx(g, cfg, prefix=prefix)(target, mu).x


def prox_certificate(g: DirectedGraph, x, target, mu: float, prefix=None, kink_tol=1e-9) -> float:
    """Optimality residual of a candidate prox point.

    Builds the best subgradient of GDV at ``x`` from per-edge hinge
    multipliers (fixed at ``w_e`` or ``0`` off the kink, free in ``[0, w_e]``
    on it) and returns ``||E^T lam + mu (x - t)||_inf`` after removing the
    component normal to the constraint subspace.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(target, dtype=float)
    E = EdgeDifferenceOperator(g)
    r0 = mu * (x - t)
    N = complement_basis(prefix)
    proj = (lambda v: v) if N is None else (lambda v: N @ (N.T @ v))
    if E.m == 0:
        return float(np.abs(proj(r0)).max())
    d = E(x)
    lam = np.where(d > kink_tol, E.weights, 0.0)
    kink = np.abs(d) <= kink_tol
    r = r0 + E.adjoint(lam)
    if kink.any():
        A = E.matrix_t[:, np.flatnonzero(kink)].toarray()
        if N is not None:
            A = N.T @ A
            b = -(N.T @ r)
        else:
            b = -r
        sol = lsq_linear(A, b, bounds=(0.0, E.weights[kink]), method="bvls", tol=1e-14)
        r = r + E.matrix_t[:, np.flatnonzero(kink)] @ sol.x
    return float(np.abs(proj(r)).max())


def nearest_orthonormal(M) -> np.ndarray:
    """Orthonormal ``P`` maximizing ``trace(P^T M)``: ``Q T^T`` from ``M = Q S T^T``."""
    Q, _, Tt = np.linalg.svd(np.asarray(M, dtype=float))
    return Q @ Tt


def project_complement(x, basis_prefix) -> np.ndarray:
    """Remove from ``x`` its components along orthonormal ``basis_prefix``."""
    x = np.asarray(x, dtype=float)
    V = np.asarray(basis_prefix, dtype=float)
    if V.size == 0:
        return x.copy()
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[0] != x.shape[0]:
        V = V.T
    out = x - V @ (V.T @ x)
    # second pass cleans up cancellation error
    return out - V @ (V.T @ out)
