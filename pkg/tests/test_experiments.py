import csv
import json

import numpy as np
import pytest

from digft.experiments import ExperimentSpec, _solve, run_experiment, spread_curve, timing_graph
from digft.graph import gen_three_cluster


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_spread_curve_holds_finished_runs():
    m, mean, std = spread_curve([np.array([3.0, 1.0]), np.array([5.0, 4.0, 3.0])])
    assert m.tolist() == [1, 2, 3]
    assert mean.tolist() == [4.0, 2.5, 2.0]
    assert std.tolist() == [1.0, 1.5, 1.0]


@pytest.mark.parametrize("kw", [{"experiment": "nope"}, {"seeds": 0}, {"methods": ()}])
def test_spec_validation(kw):
    args = {"experiment": "timing", "out_dir": "x", **kw}
    with pytest.raises(ValueError):
        ExperimentSpec(**args)


def test_spec_digest_ignores_output_directory():
    a = ExperimentSpec("timing", "a", seeds=2)
    assert a.digest() == ExperimentSpec("timing", "b", seeds=2).digest()
    assert a.digest() != ExperimentSpec("timing", "a", seeds=3).digest()


def test_solver_errors_are_recorded_not_raised():
    res = _solve((gen_three_cluster("A"), "adjacency", None))
    assert res["basis"] is None and res["error"].startswith("ValueError")


def test_timing_graph_is_partly_directed():
    g = timing_graph(30, 0)
    A = g.adjacency
    one_way = ((A > 0) & (A.T == 0)).sum()
    assert g.n == 30 and 0 < one_way < (A > 0).sum()


def test_zero_gdv_counts_table(tmp_path):
    spec = ExperimentSpec("zero-gdv-counts", str(tmp_path), seeds=1, variants=("C",), methods=("soc",))
    run_experiment(spec)
    rows = read_csv(tmp_path / "zero_gdv_counts.csv")
    assert len(rows) == 1 and rows[0]["zero_gdv_columns"] == "1"


def test_manifest_hashes_and_flags(tmp_path):
    spec = ExperimentSpec("timing", str(tmp_path), seeds=1, sizes=(8,), methods=("soc",), overrides={"soc": {"max_iter": "20"}})
    manifest = json.loads(run_experiment(spec).read_text())
    assert manifest["nondeterministic_files"] == ["wallclock.csv"]
    assert set(manifest["files"]) == {"timing_results.csv"}
    assert manifest["config_digests"]["soc"] != ""
    assert manifest["spec"]["overrides"] == {"soc": {"max_iter": "20"}}
    assert (tmp_path / "wallclock.csv").exists()


def test_convergence_spread_writes_traces_and_curve(tmp_path):
    spec = ExperimentSpec("convergence-spread", str(tmp_path), seeds=2, methods=("soc",), overrides={"soc": {"max_iter": "15"}})
    run_experiment(spec)
    curve = read_csv(tmp_path / "curve_soc.csv")
    assert curve[0]["m"] == "1" and curve[0]["runs"] == "2"
    assert (tmp_path / "traces" / "soc_seed1.csv").exists()

