"""Proximal alternating minimized augmented Lagrangian (PAMAL).

The outer loop updates box-projected multipliers and the penalty; the
inner loop runs proximal Gauss-Seidel sweeps on the augmented Lagrangian
until the subgradient certificate ``Theta`` drops below the current
tolerance ``eps_k = eps_decay ** k``.
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

PAMAL_TRACE_COLUMNS = (
    "iteration", "outer", "gdv_x", "gdv_p", "infeasibility", "theta_inf", "rho",
)


@dataclass(frozen=True)
class PamalConfig:
    rho1: float = 50.0
    gamma: float = 1.5
    tau: float = 0.5
    eps_decay: float = 0.9
    c1: float = 0.5
    c2: float = 0.5
    c_min: float = 0.5
    c_max: float = 0.5
    lambda_min: float = -1000.0
    lambda_max: float = 1000.0
    # ceiling on the penalty; the inner loop slows like c / rho
    rho_max: float = 200.0
    max_outer: int = 200
    max_inner: int = 500
    tol: float = 1e-6
    init: str = "identity"
    seed: int | None = None
    prox: ProxGdvConfig = field(default_factory=ProxGdvConfig)

    def __post_init__(self):
        if not self.rho1 > 0:
            raise ValueError("rho1 must be positive")
        if not self.rho_max >= self.rho1:
            raise ValueError("rho_max must be at least rho1")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not 0 <= self.tau < 1:
            raise ValueError("tau must lie in [0, 1)")
        if not 0 < self.eps_decay < 1:
            raise ValueError("eps_decay must lie in (0, 1)")
        if not 0 < self.c_min <= self.c_max < np.inf:
            raise ValueError("need 0 < c_min <= c_max < inf")
        for c in (self.c1, self.c2):
            if not self.c_min <= c <= self.c_max:
                raise ValueError("proximal constants must lie in [c_min, c_max]")
        if not self.lambda_min <= 0.0 <= self.lambda_max:
            raise ValueError("the multiplier box must contain the zero start")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.init not in ("identity", "random"):
            raise ValueError("init must be 'identity' or 'random'")

    def eps(self, k: int) -> float:
        return self.eps_decay**k


@dataclass
class PamalState:
    X: np.ndarray
    P: np.ndarray
    Lam: np.ndarray
    rho: float
    R_prev: float = np.inf
    k: int = 1


@dataclass
class InnerResult:
    X: np.ndarray
    P: np.ndarray
    theta: float
    steps: int
    reached: bool
    # subgradient of GDV at X picked by the last X-step (columns 2..n)
    subgradient: np.ndarray


def x_step_target(state: PamalState, c1: float) -> np.ndarray:
    """Completed-square centre of the X-step: ``(rho P + Lam + c1 X) / (rho + c1)``."""
    return (state.rho * state.P + state.Lam + c1 * state.X) / (state.rho + c1)


def pam_inner(
    g: DirectedGraph,
    state: PamalState,
    c1: float,
    c2: float,
    eps: float,
    cfg: PamalConfig,
    prox: GdvProx | None = None,
    on_step=None,
) -> InnerResult:
    """Proximal Gauss-Seidel sweeps until ``||Theta||_inf <= eps``."""
    n = g.n
    b1 = constant_vector(n)
    prox = prox or GdvProx(g, cfg.prox)
    rho, Lam = state.rho, state.Lam
    X_prev, P_prev = state.X, state.P
    theta = np.inf
    sub = np.zeros((n, n - 1))
    steps = 0
    for steps in range(1, cfg.max_inner + 1):
        mu = rho + c1
        G = (rho * P_prev + Lam + c1 * X_prev) / mu
        X = np.empty((n, n))
        X[:, 0] = b1
        X[:, 1:] = prox(G[:, 1:], mu).x
        sub = mu * (G[:, 1:] - X[:, 1:])
        F = (c2 * P_prev + rho * X - Lam) / (rho + c2)
        P = nearest_orthonormal(F)
        theta1 = c1 * (X_prev - X) + rho * (P_prev - P)
        theta2 = c2 * (P_prev - P)
        theta = max(np.abs(theta1).max(), np.abs(theta2).max())
        X_prev, P_prev = X, P
        if on_step is not None:
            on_step(X, P, theta)
        if theta <= eps:
            return InnerResult(X, P, theta, steps, True, sub)
    return InnerResult(X_prev, P_prev, theta, steps, False, sub)


def kkt_residual(X: np.ndarray, P: np.ndarray, Lam: np.ndarray, subgradient: np.ndarray) -> float:
    """Largest violation among feasibility, X- and P-stationarity.

    X-stationarity compares the multiplier with the GDV subgradient chosen
    by the last X-step (the constant column is free).  P-stationarity asks
    the multiplier to be normal to the orthogonal group at ``P``, i.e.
    ``Lam = P sym(P^T Lam)``.
    """
    feas = np.abs(P - X).max()
    x_stat = np.abs(subgradient - Lam[:, 1:]).max(initial=0.0)
    S = P.T @ Lam
    p_stat = np.abs(Lam - P @ ((S + S.T) / 2)).max()
    return float(max(feas, x_stat, p_stat))


def pamal_basis(g: DirectedGraph, cfg: PamalConfig | None = None, X0: np.ndarray | None = None) -> FourierBasis:
    cfg = cfg or PamalConfig()
    n = g.n
    if n < 2:
        raise ValueError("need at least two nodes")
    P0 = initial_basis(n, cfg.init, cfg.seed) if X0 is None else np.array(X0, dtype=float)
    state = PamalState(P0.copy(), P0.copy(), np.zeros((n, n)), cfg.rho1)
    prox = GdvProx(g, cfg.prox)
    trace = ConvergenceTrace(PAMAL_TRACE_COLUMNS)
    outer_log = []
    counter = [0]

    def record(X, P, theta):
        counter[0] += 1
        trace.append(
            counter[0], state.k, float(gdv(g, X).sum()), float(gdv(g, P).sum()),
            float(np.abs(X - P).max()), float(theta), state.rho,
        )

    converged = False
    inner_ok = True
    res = None
    for k in range(1, cfg.max_outer + 1):
        state.k = k
        eps = cfg.eps(k)
        res = pam_inner(g, state, cfg.c1, cfg.c2, eps, cfg, prox, on_step=record)
        inner_ok &= res.reached
        state.X, state.P = res.X, res.P
        R = state.P - state.X
        state.Lam = np.clip(state.Lam + state.rho * R, cfg.lambda_min, cfg.lambda_max)
        r_inf = float(np.abs(R).max())
        outer_log.append(
            {"outer": k, "eps": eps, "theta": res.theta, "inner_steps": res.steps,
             "reached": res.reached, "infeasibility": r_inf, "rho": state.rho,
             "lambda_min": float(state.Lam.min()), "lambda_max": float(state.Lam.max())}
        )
        if r_inf <= cfg.tol and eps <= cfg.tol:
            converged = True
            break
        # no growth once the splitting residual is already within tolerance
        if r_inf > cfg.tau * state.R_prev and r_inf > cfg.tol:
            state.rho = min(state.rho * cfg.gamma, cfg.rho_max)
        state.R_prev = r_inf
    if not converged:
        log.warning("PAMAL stopped at the outer cap (%d)", cfg.max_outer)
    kkt = kkt_residual(state.X, state.P, state.Lam, res.subgradient)
    Xf, values = finalize_basis(g, state.P, lambda x: gdv(g, x))
    return FourierBasis(
        Xf,
        values,
        "pamal",
        trace,
        converged and inner_ok,
        info={
            "outer_iterations": len(outer_log),
            "inner_steps": counter[0],
            "final_infeasibility": float(np.abs(state.P - state.X).max()),
            "kkt_residual": kkt,
            "rho": state.rho,
            "inner_reached_all": bool(inner_ok),
            "outer_log": outer_log,
        },
    )
