"""Directed-graph Fourier bases from cut-size minimization."""

__version__ = "0.1.0"

from .basis import FourierBasis, ConvergenceTrace  # noqa: E402
from .graph import DirectedGraph  # noqa: E402

__all__ = ["DirectedGraph", "FourierBasis", "ConvergenceTrace", "__version__"]
