"""Name-based dispatch from a method string plus overrides to a basis."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import typing

import numpy as np

from .balanced import BalancedConfig, balanced_basis
from .basis import FourierBasis
from .graph import DirectedGraph
from .pamal import PamalConfig, pamal_basis
from .proxcore import ProxGdvConfig
from .soc import SocConfig, soc_basis
from .spectral import adjacency_eigenbasis, laplacian_eigenbasis

CONFIGS = {"soc": SocConfig, "pamal": PamalConfig, "balanced": BalancedConfig}
METHODS = ("soc", "pamal", "balanced", "laplacian", "adjacency")


class ConfigError(ValueError):
    """Unknown key or unparsable value in a method configuration."""


def config_fields(cls) -> dict[str, type]:
    """Flat ``name -> type`` map; the nested prox config appears as ``prox_*``."""
    hints = typing.get_type_hints(cls)
    out = {}
    for f in dataclasses.fields(cls):
        if f.name == "prox":
            for name, tp in config_fields(ProxGdvConfig).items():
                out["prox_" + name] = tp
        else:
            out[f.name] = hints[f.name]
    return out


def _parse(value, tp):
    if not isinstance(value, str):
        return value
    v = value.strip()
    args = typing.get_args(tp)
    if args and type(None) in args:
        if v.lower() in ("none", ""):
            return None
        tp = next(a for a in args if a is not type(None))
    if tp is bool:
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if tp is int:
        return int(v)
    if tp is float:
        return float(v)
    return v


def make_config(method: str, overrides: dict | None = None):
    """Config dataclass for ``method`` with string or typed ``overrides`` applied."""
    if method not in CONFIGS:
        if overrides:
            raise ConfigError(f"method {method!r} takes no options")
        return None
    cls = CONFIGS[method]
    fields = config_fields(cls)
    top, prox = {}, {}
    for key, value in (overrides or {}).items():
        key = key.replace("-", "_")
        if key not in fields:
            raise ConfigError(f"unknown option {key!r} for method {method!r}")
        try:
            parsed = _parse(value, fields[key])
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        if key.startswith("prox_"):
            prox[key[5:]] = parsed
        else:
            top[key] = parsed
    try:
        if prox:
            top["prox"] = ProxGdvConfig(**prox)
        return cls(**top)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def config_dict(cfg) -> dict:
    return {} if cfg is None else dataclasses.asdict(cfg)


def config_digest(method: str, cfg) -> str:
    blob = json.dumps({"method": method, "config": config_dict(cfg)}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def build_basis(g: DirectedGraph, method: str, cfg=None) -> FourierBasis:
    if method == "soc":
        return soc_basis(g, cfg or SocConfig())
    if method == "pamal":
        return pamal_basis(g, cfg or PamalConfig())
    if method == "balanced":
        return balanced_basis(g, cfg or BalancedConfig())
    if method == "laplacian":
        return laplacian_eigenbasis(g)
    if method == "adjacency":
        return adjacency_eigenbasis(g)
    raise ConfigError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


def check_basis(basis: FourierBasis, tol=1e-6) -> None:
    """Raise ``FloatingPointError`` when the basis is not a usable orthonormal matrix."""
    if not np.all(np.isfinite(basis.X)):
        raise FloatingPointError("basis has non-finite entries")
    err = basis.orthonormality_error()
    if err > tol:
        raise FloatingPointError(f"basis orthonormality error {err:.3e} exceeds {tol:g}")
