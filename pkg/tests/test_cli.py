import json
import subprocess
import sys

import numpy as np
import pytest

from faultdarcy.adapt import AdaptConfig, run_study
from faultdarcy.cli import main, read_results, write_results
from faultdarcy.mesh import read_mesh


def test_default_run_writes_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["--problem", "manufactured", "--family", "bdm1", "--mode", "adaptive",
                 "--theta", "0.5", "--iters", "4", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config ")
    cfg = json.loads(lines[0][9:])
    assert cfg["alpha"] == pytest.approx(4 / (3 * np.pi))
    assert len(lines) == 2 + 4


def test_dump_mesh_files(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["--problem", "fault-flow", "--iters", "5", "--dump-mesh", "--out", str(out)]) == 0
    files = sorted(tmp_path.glob("run_mesh_*.txt"))
    assert len(files) == 5
    _, recs = read_results(out)
    for f, r in zip(files, recs):
        assert read_mesh(f).n_cells == r.n_cells


def test_matrix_and_estimator_dumps(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["--iters", "2", "--dump-matrix", "--dump-estimator", "--out", str(out)]) == 0
    assert len(list(tmp_path.glob("d_matrix_*.txt"))) == 2
    est = json.loads((tmp_path / "d_estimator_001.json").read_text())
    _, recs = read_results(out)
    assert est["eta_total"] == pytest.approx(recs[1].eta_total, rel=1e-15)


@pytest.mark.parametrize("args,flag", [(["--theta", "1.5"], "--theta"), (["--theta", "0"], "--theta"),
                                       (["--n", "6"], "--n"), (["--problem", "nope"], "--problem"),
                                       (["--alpha", "-2"], "--alpha"), (["--iters", "0"], "--iters")])
def test_invalid_arguments(args, flag, capsys):
    with pytest.raises(SystemExit) as exc:
        main(args)
    assert exc.value.code != 0
    assert flag in capsys.readouterr().err


@pytest.mark.parametrize("as_json", [False, True])
def test_results_round_trip(tmp_path, as_json):
    cfg = AdaptConfig(max_iterations=2).resolved()
    recs = run_study(cfg)
    path = tmp_path / ("r.json" if as_json else "r.csv")
    write_results(path, cfg, recs, as_json=as_json)
    cfg_back, recs_back = read_results(path)
    assert cfg_back == cfg.to_dict()
    assert recs_back == recs


def test_fault_flow_csv_leaves_errors_empty(tmp_path):
    out = tmp_path / "ff.csv"
    assert main(["--problem", "fault-flow", "--alpha", "0.1", "--iters", "2", "--out", str(out)]) == 0
    cfg, recs = read_results(out)
    assert cfg["alpha"] == 0.1
    assert all(r.flux_error is None and r.effectivity is None for r in recs)


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cmd = [sys.executable, "-m", "faultdarcy", "--iters", "3", "--family", "rt1"]
    subprocess.run(cmd + ["--out", str(a)], check=True)
    subprocess.run(cmd + ["--out", str(b)], check=True)
    assert a.read_bytes() == b.read_bytes()
