"""Cut size, its Lovász extension and the graph-signal variation metrics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .graph import DirectedGraph, laplacian, symmetrize

BRUTE_FORCE_LIMIT = 20


def _indicator(g: DirectedGraph, s) -> np.ndarray:
    s = np.asarray(s)
    if s.dtype != bool:
        # a collection of node indices
        mask = np.zeros(g.n, dtype=bool)
        mask[s.astype(int)] = True
        return mask
    if s.shape != (g.n,):
        raise ValueError(f"indicator of length {s.shape} for a graph with {g.n} nodes")
    return s


def _signal(g: DirectedGraph, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != g.n:
        raise ValueError(f"signal of length {x.shape[0]} for a graph with {g.n} nodes")
    return x


def cut_size(g: DirectedGraph, s) -> float:
    """Total weight of edges leaving ``s`` (boolean mask or node indices)."""
    mask = _indicator(g, s)
    if g.num_edges == 0:
        return 0.0
    leaving = mask[g.src] & ~mask[g.dst]
    return float(g.weights[leaving].sum())


def lovasz_extension(g: DirectedGraph, x) -> float:
    """Lovász extension of the cut function, evaluated from its definition.

    Sort ``x`` increasingly (stable, ties by index) and accumulate
    ``F(C_i) * (x_(i+1) - x_(i))`` over the upper level sets ``C_i`` plus
    ``x_(1) F(V)``.  Independent of :func:`gdv`, which it must equal.
    """
    x = _signal(g, x)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    total = xs[0] * cut_size(g, np.ones(g.n, dtype=bool))
    upper = np.ones(g.n, dtype=bool)
    for i in range(g.n - 1):
        upper[order[i]] = False
        step = xs[i + 1] - xs[i]
        if step:
            total += cut_size(g, upper) * step
    return float(total)


def gdv(g: DirectedGraph, x) -> float | np.ndarray:
    """Graph directed variation ``sum_e w_e [x_src - x_dst]_+``.

    ``x`` may be a matrix, in which case one value per column is returned.
    """
    x = _signal(g, x)
    if g.num_edges == 0:
        return 0.0 if x.ndim == 1 else np.zeros(x.shape[1])
    d = x[g.src] - x[g.dst]
    w = g.weights if x.ndim == 1 else g.weights[:, None]
    out = (w * np.maximum(d, 0.0)).sum(axis=0)
    return float(out) if x.ndim == 1 else out


def gav(g: DirectedGraph, x) -> float | np.ndarray:
    """Graph absolute variation over unordered pairs, symmetrized weights."""
    gs = symmetrize(g)
    x = _signal(gs, x)
    if gs.num_edges == 0:
        return 0.0 if x.ndim == 1 else np.zeros(x.shape[1])
    keep = gs.src < gs.dst
    s, d = gs.src[keep], gs.dst[keep]
    w = gs.weights[keep] if x.ndim == 1 else gs.weights[keep][:, None]
    out = (w * np.abs(x[s] - x[d])).sum(axis=0)
    return float(out) if x.ndim == 1 else out


def gqv(g: DirectedGraph, x) -> float | np.ndarray:
    """Graph quadratic variation; equals ``x^T L x`` on undirected graphs.

    Directed inputs are symmetrized first, as for :func:`gav`.
    """
    gs = symmetrize(g)
    x = _signal(gs, x)
    if gs.num_edges == 0:
        return 0.0 if x.ndim == 1 else np.zeros(x.shape[1])
    keep = gs.src < gs.dst
    s, d = gs.src[keep], gs.dst[keep]
    w = gs.weights[keep] if x.ndim == 1 else gs.weights[keep][:, None]
    out = (w * (x[s] - x[d]) ** 2).sum(axis=0)
    return float(out) if x.ndim == 1 else out


def spectral_radius(g: DirectedGraph) -> float:
    A = g.adjacency
    if g.is_symmetric:
        return float(np.abs(np.linalg.eigvalsh(A)).max())
    return float(np.abs(np.linalg.eigvals(A)).max())


def tv_adjacency(g: DirectedGraph, s) -> float:
    """``||s - A s / |lambda_max(A)| ||_1``."""
    s = _signal(g, s)
    r = spectral_radius(g)
    if r <= 0:
        raise ValueError("adjacency has zero spectral radius")
    return float(np.abs(s - g.adjacency @ s / r).sum(axis=0))


def tv_laplacian(g: DirectedGraph, s) -> float:
    s = _signal(g, s)
    return float(np.abs(laplacian(g) @ s).sum(axis=0))


def median(x: np.ndarray) -> float:
    """Median; midpoint of the two central values for even length."""
    return float(np.median(x))


@dataclass(frozen=True)
class CheegerObjective:
    kind: str
    value: float  # nan when undefined
    balance: float
    median: float
    numerator: float

    @property
    def undefined(self) -> bool:
        return not self.balance > 0


def cheeger_eval(g: DirectedGraph, x, kind: str = "GAV") -> CheegerObjective:
    """Ratio of the variation ``f(x)`` to ``B(x) = sum |x_i - m(x)|``."""
    x = _signal(g, x)
    kind = kind.upper()
    if kind == "GAV":
        f = gav(g, x)
    elif kind == "GDV":
        f = gdv(g, x)
    else:
        raise ValueError(f"kind must be GDV or GAV, not {kind!r}")
    m = median(x)
    b = float(np.abs(x - m).sum())
    value = f / b if b > 0 else float("nan")
    return CheegerObjective(kind, value, b, m, f)


# -- brute-force oracles -----------------------------------------------------

def _all_cut_values(g: DirectedGraph) -> np.ndarray:
    """Cut size of every subset, indexed by ``sum_i 2**i [i in S]``."""
    n = g.n
    masks = np.arange(2**n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    if g.num_edges == 0:
        return np.zeros(2**n)
    leaving = bits[:, g.src] & ~bits[:, g.dst]
    return leaving.astype(float) @ g.weights


def _check_size(g: DirectedGraph):
    if g.n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to n <= {BRUTE_FORCE_LIMIT}, got {g.n}")
    if g.n < 2:
        raise ValueError("need at least two nodes for a proper subset")


def brute_force_min_cut(g: DirectedGraph) -> tuple[np.ndarray, float]:
    """Minimum cut over nonempty proper subsets, by enumeration.

    Ties go to the subset with the smallest code ``sum_i 2**i [i in S]``.
    """
    _check_size(g)
    values = _all_cut_values(g)[1:-1]
    code = int(np.argmin(values)) + 1
    mask = ((code >> np.arange(g.n)) & 1).astype(bool)
    return mask, float(values[code - 1])


def brute_force_cheeger(g: DirectedGraph) -> tuple[np.ndarray, float]:
    """Minimum of ``cut(S) / min(|S|, |S^c|)`` over nonempty proper subsets."""
    _check_size(g)
    n = g.n
    codes = np.arange(1, 2**n - 1, dtype=np.int64)
    sizes = ((codes[:, None] >> np.arange(n)) & 1).sum(axis=1)
    ratio = _all_cut_values(g)[1:-1] / np.minimum(sizes, n - sizes)
    k = int(np.argmin(ratio))
    mask = ((int(codes[k]) >> np.arange(n)) & 1).astype(bool)
    return mask, float(ratio[k])


def cheeger_ratio(g: DirectedGraph, s) -> float:
    mask = _indicator(g, s)
    k = int(mask.sum())
    if k in (0, g.n):
        return float("inf")
    return cut_size(g, mask) / min(k, g.n - k)


def best_threshold_cheeger(g: DirectedGraph, x) -> tuple[np.ndarray, float]:
    """Best Cheeger ratio among the level sets ``{x > nu}``."""
    x = _signal(g, x)
    best_mask, best = None, float("inf")
    for nu in np.unique(x)[:-1]:
        mask = x > nu
        r = cheeger_ratio(g, mask)
        if r < best:
            best_mask, best = mask, r
    if best_mask is None:
        return np.zeros(g.n, dtype=bool), float("inf")
    return best_mask, best


def subsets(n: int):
    """All boolean indicator vectors of length ``n``."""
    for bits in itertools.product((False, True), repeat=n):
        yield np.array(bits[::-1], dtype=bool)
