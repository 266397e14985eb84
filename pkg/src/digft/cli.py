"""``digft`` command line.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
Every subcommand accepts ``--config FILE`` holding ``key=value`` lines;
explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .balanced import DegenerateIterate
from .graph import EdgeListError, gen_random_geometric, gen_scale_free, gen_three_cluster, read_edge_list, write_edge_list
from .io import load_basis, read_vector, save_basis, save_trace, write_vector
from .methods import CONFIGS, METHODS, ConfigError, build_basis, check_basis, config_digest, config_dict, config_fields, make_config
from .spectral import column_metric, gft_forward, gft_inverse

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

log = logging.getLogger("digft")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def read_config_file(path) -> dict[str, str]:
    """``key=value`` per line; blank lines and ``#`` comments are skipped."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _merge(args, names, file_cfg: dict) -> dict:
    """Config-file values for ``names`` overridden by non-None flags."""
    merged = {k: v for k, v in file_cfg.items() if k in names}
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            merged[name] = v
    return merged


def _method_option_names():
    names = set()
    for cls in CONFIGS.values():
        names |= set(config_fields(cls))
    return sorted(names)


# -- subcommands -----------------------------------------------------------------

GEN_KEYS = ("model", "variant", "nodes", "min_degree", "radius", "directed_fraction", "seed")


def cmd_gen(args, file_cfg):
    opts = _merge(args, GEN_KEYS, file_cfg)
    unknown = set(file_cfg) - set(GEN_KEYS) - {"output"}
    if unknown:
        raise UsageError(f"unknown config keys for gen: {', '.join(sorted(unknown))}")
    model = opts.get("model")
    try:
        if model == "three-cluster":
            g = gen_three_cluster(str(opts.get("variant", "A")))
        elif model == "scale-free":
            g = gen_scale_free(int(opts.get("nodes", 20)), int(opts.get("min_degree", 2)), int(opts.get("seed", 0)))
        elif model == "rgg":
            g = gen_random_geometric(
                int(opts.get("nodes", 20)),
                float(opts.get("radius", 0.4)),
                float(opts.get("directed_fraction", 0.0)),
                int(opts.get("seed", 0)),
            )
        else:
            raise UsageError("gen needs --model three-cluster|scale-free|rgg")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_edge_list(g, args.output)
    return EXIT_OK


def cmd_basis(args, file_cfg):
    method = args.method or file_cfg.pop("method", None)
    if method not in METHODS:
        raise UsageError(f"--method must be one of {', '.join(METHODS)}")
    names = _method_option_names()
    allowed = set(config_fields(CONFIGS[method])) if method in CONFIGS else set()
    overrides = _merge(args, names, file_cfg)
    bad = sorted((set(overrides) | (set(file_cfg) - {"graph", "output", "trace"})) - allowed)
    if bad:
        raise UsageError(f"options not valid for method {method}: {', '.join(bad)}")
    cfg = make_config(method, overrides)
    g = read_edge_list(args.graph)
    basis = build_basis(g, method, cfg)
    check_basis(basis)
    if not basis.converged:
        log.warning("%s did not meet its stopping rule; the basis is flagged in the sidecar", method)
    meta = {"config": config_dict(cfg), "config_digest": config_digest(method, cfg), "graph": str(args.graph)}
    save_basis(args.output, basis, meta)
    if args.trace:
        if basis.trace is None:
            raise UsageError(f"method {method} produces no trace")
        save_trace(args.trace, basis.trace)
    return EXIT_OK


def cmd_transform(args, file_cfg):
    basis = load_basis(args.basis)
    s = read_vector(args.signal)
    out = gft_inverse(basis, s) if args.inverse else gft_forward(basis, s)
    if args.output:
        write_vector(args.output, out)
    else:
        sys.stdout.write("".join(format(float(v), ".17g") + "\n" for v in out))
    return EXIT_OK


def cmd_metrics(args, file_cfg):
    g = read_edge_list(args.graph)
    basis = load_basis(args.basis)
    if basis.n != g.n:
        raise UsageError(f"basis size {basis.n} does not match graph size {g.n}")
    names = ("GDV", "GAV", "GQV", "TV_L")
    cols = [column_metric(g, basis.X, m) for m in names]
    lines = ["column," + ",".join(names)]
    for j in range(basis.n):
        lines.append(",".join([str(j + 1)] + [format(float(c[j]), ".17g") for c in cols]))
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _split(value, cast=str):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return tuple(cast(v) for v in str(value).split(",") if v.strip())


def cmd_experiment(args, file_cfg):
    from .experiments import ExperimentSpec, run_experiment

    overrides: dict[str, dict] = {}
    plain = {}
    for key, value in file_cfg.items():
        if "." in key:
            m, opt = key.split(".", 1)
            overrides.setdefault(m, {})[opt] = value
        else:
            plain[key] = value
    for item in args.set or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise UsageError(f"--set expects method.option=value, got {item!r}")
        key, value = item.split("=", 1)
        m, opt = key.split(".", 1)
        overrides.setdefault(m, {})[opt.replace("-", "_")] = value
    keys = ("seeds", "nodes", "dmin", "variants", "methods", "sizes", "out")
    unknown = set(plain) - set(keys)
    if unknown:
        raise UsageError(f"unknown config keys for experiment: {', '.join(sorted(unknown))}")
    opts = _merge(args, keys, plain)
    if "out" not in opts:
        raise UsageError("experiment needs --out DIR")
    kw = {}
    if "seeds" in opts:
        kw["seeds"] = int(opts["seeds"])
    if "nodes" in opts:
        kw["n"] = int(opts["nodes"])
    if "dmin" in opts:
        kw["d_min"] = _split(opts["dmin"], int)
    if "variants" in opts:
        kw["variants"] = _split(opts["variants"], str.upper)
    if "methods" in opts:
        kw["methods"] = _split(opts["methods"])
    if "sizes" in opts:
        kw["sizes"] = _split(opts["sizes"], int)
    for m, o in overrides.items():
        make_config(m, o)  # validate early
    try:
        spec = ExperimentSpec(args.name, str(opts["out"]), overrides=overrides, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest = run_experiment(spec)
    print(manifest)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="digft", description="Fourier bases for directed graphs by directed-variation minimization.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a graph as an edge list")
    g.add_argument("--model", choices=("three-cluster", "scale-free", "rgg"))
    g.add_argument("--variant")
    g.add_argument("--nodes", type=int)
    g.add_argument("--min-degree", type=int)
    g.add_argument("--radius", type=float)
    g.add_argument("--directed-fraction", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--config")

    b = sub.add_parser("basis", help="compute a Fourier basis")
    b.add_argument("--method", choices=METHODS)
    b.add_argument("--graph", required=True)
    b.add_argument("-o", "--output", required=True)
    b.add_argument("--trace")
    b.add_argument("--config")
    opts = b.add_argument_group("solver options (each applies to the methods that define it)")
    for name in _method_option_names():
        opts.add_argument("--" + name.replace("_", "-"), dest=name, metavar="VALUE")

    t = sub.add_parser("transform", help="forward or inverse graph Fourier transform")
    t.add_argument("--basis", required=True)
    t.add_argument("--signal", required=True)
    t.add_argument("--inverse", action="store_true")
    t.add_argument("-o", "--output")
    t.add_argument("--config")

    m = sub.add_parser("metrics", help="per-column variation metrics of a basis")
    m.add_argument("--graph", required=True)
    m.add_argument("--basis", required=True)
    m.add_argument("-o", "--output")
    m.add_argument("--config")

    e = sub.add_parser("experiment", help="run an experiment ensemble")
    e.add_argument("name", choices=("convergence-spread", "gav-vs-mindegree", "gqv-invariance", "zero-gdv-counts", "timing"))
    e.add_argument("--out")
    e.add_argument("--seeds", type=int)
    e.add_argument("--nodes", type=int)
    e.add_argument("--dmin")
    e.add_argument("--variants")
    e.add_argument("--methods")
    e.add_argument("--sizes")
    e.add_argument("--set", action="append", metavar="METHOD.OPTION=VALUE")
    e.add_argument("--config")
    return p


COMMANDS = {
    "gen": cmd_gen,
    "basis": cmd_basis,
    "transform": cmd_transform,
    "metrics": cmd_metrics,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        file_cfg = read_config_file(args.config) if args.config else {}
        return COMMANDS[args.command](args, file_cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (ConfigError, EdgeListError, OSError) as exc:
        print(f"digft: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, np.linalg.LinAlgError, DegenerateIterate) as exc:
        print(f"digft: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"digft: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
