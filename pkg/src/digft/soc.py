"""Splitting of orthogonality constraints (SOC) for the directed-variation basis.

Each iteration solves a proximal problem for every non-constant column,
projects onto the orthogonal group with an SVD and takes a Bregman step
on the splitting residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import ConvergenceTrace, FourierBasis, constant_vector, finalize_basis, initial_basis
from .graph import DirectedGraph
from .proxcore import GdvProx, ProxGdvConfig, nearest_orthonormal
from .variation import gdv

log = logging.getLogger(__name__)

SOC_TRACE_COLUMNS = ("iteration", "gdv_x", "gdv_p", "infeasibility")


@dataclass(frozen=True)
class SocConfig:
    beta: float = 100.0
    max_iter: int = 500
    tol_infeasibility: float = 1e-6
    tol_objective: float = 1e-8
    init: str = "identity"
    seed: int | None = None
    prox: ProxGdvConfig = field(default_factory=ProxGdvConfig)

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not (self.tol_infeasibility > 0 and self.tol_objective > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.init not in ("identity", "random"):
            raise ValueError("init must be 'identity' or 'random'")


def soc_basis(g: DirectedGraph, cfg: SocConfig | None = None, X0: np.ndarray | None = None) -> FourierBasis:
    cfg = cfg or SocConfig()
    n = g.n
    if n < 2:
        raise ValueError("need at least two nodes")
    b1 = constant_vector(n)
    P = initial_basis(n, cfg.init, cfg.seed) if X0 is None else np.array(X0, dtype=float)
    X = P.copy()
    B = np.zeros((n, n))
    prox = GdvProx(g, cfg.prox)
    trace = ConvergenceTrace(SOC_TRACE_COLUMNS)
    prev_obj = None
    converged = False
    for k in range(1, cfg.max_iter + 1):
        X = np.empty((n, n))
        X[:, 0] = b1
        X[:, 1:] = prox(P[:, 1:] - B[:, 1:], cfg.beta).x
        Y = X + B
        P = nearest_orthonormal(Y)
        B = Y - P
        obj_x = float(gdv(g, X).sum())
        obj_p = float(gdv(g, P).sum())
        infeas = float(np.abs(X - P).max())
        trace.append(k, obj_x, obj_p, infeas)
        if prev_obj is not None:
            rel = abs(obj_x - prev_obj) / max(1.0, abs(obj_x))
            if infeas <= cfg.tol_infeasibility and rel <= cfg.tol_objective:
                converged = True
                break
        prev_obj = obj_x
    if not converged:
        log.warning("SOC stopped at the iteration cap (%d), infeasibility %.3g", cfg.max_iter, infeas)
    Xf, values = finalize_basis(g, P, lambda x: gdv(g, x))
    return FourierBasis(
        Xf,
        values,
        "soc",
        trace,
        converged,
        info={"iterations": k, "final_infeasibility": infeas},
    )
