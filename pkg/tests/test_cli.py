import csv
import json
import math
import shutil
import subprocess
import sys

import numpy as np
import pytest

from diffquad import cli, quadrature
from diffquad.measures import PointMeasure
from diffquad.spaces import circle_space, sphere2_space

SWEEP = ["wce-sweep", "--space", "circle", "--orders", "8,16,32,64", "--gamma", "2", "--p", "inf",
         "--rule", "trapezoid", "--seed", "7"]


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_wce_sweep_example(tmp_path):
    out = tmp_path / "sweep.csv"
    assert cli.main(SWEEP + ["--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["n", "wce", "tv", "reg_const", "discrepancy"]
    assert [r[0] for r in rows[1:]] == ["8", "16", "32", "64"]
    side = json.loads((tmp_path / "sweep.json").read_text())
    assert side["fitted_slope"] <= -1.7
    assert all(float(r[2]) == 1.0 for r in rows[1:])


def test_sweep_matches_library(tmp_path):
    out = tmp_path / "sweep.csv"
    cli.main(SWEEP + ["--orders", "8,16", "--trials", "30", "--out", str(out)])
    space = circle_space(256)
    for row in read_csv(out)[1:]:
        n = int(row[0])
        res = quadrature.worst_case_error(space, quadrature.trapezoid_rule(n), 2.0, "inf", n, 30, 7)
        assert float(row[1]) == res.value
        assert float(row[4]) == quadrature.discrepancy(space, quadrature.trapezoid_rule(n), 1.5 + 1 / 2, 2)


def test_build_weights_sphere(tmp_path):
    rng = np.random.default_rng(3)
    space = sphere2_space(8)
    nodes = space.random_points(rng, 60)
    (tmp_path / "nodes.json").write_text(json.dumps(nodes.tolist()))
    out = tmp_path / "w.json"
    code = cli.main(["build-weights", "--space", "sphere", "--max-degree", "8", "--nodes",
                     str(tmp_path / "nodes.json"), "--beta", "2.5", "--constraint", "simplex",
                     "--out", str(out)])
    assert code == 0
    nu = PointMeasure.from_json(out.read_text())
    assert nu.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(nu.weights >= 0)
    report = json.loads((tmp_path / "w.json.report.json").read_text())
    assert report["solution"]["status"] == "optimal"
    assert report["discrepancy"] ** 2 == pytest.approx(report["solution"]["objective"], abs=1e-12)


def test_build_weights_exact(tmp_path):
    out = tmp_path / "w.json"
    code = cli.main(["build-weights", "--space", "circle", "--rule", "trapezoid", "--num-nodes", "9",
                     "--order", "9", "--constraint", "free", "--out", str(out)])
    assert code == 0
    report = json.loads((tmp_path / "w.json.report.json").read_text())
    assert report["regime"] == "exact"
    np.testing.assert_allclose(PointMeasure.from_json(out.read_text()).weights, 1 / 9, atol=1e-12)


def test_missing_gamma(tmp_path, capsys):
    args = [a for a in SWEEP if a not in ("--gamma", "2")]
    assert cli.main(args + ["--out", str(tmp_path / "s.csv")]) == 2
    assert "gamma" in capsys.readouterr().err


def test_unknown_flag_exit_2(tmp_path):
    assert cli.main(SWEEP + ["--bogus", "1", "--out", str(tmp_path / "s.csv")]) == 2


def test_malformed_config_line_reference(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{\n  "gamma": 2,\n  "p": "inf"\n  "seed": 7\n}\n')
    assert cli.main(["wce-sweep", "--config", str(cfg)]) == 2
    assert ":4:" in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{\n  "gamma": 2,\n  "gama": 3\n}\n')
    assert cli.main(["wce-sweep", "--config", str(cfg)]) == 2
    assert "gama" in capsys.readouterr().err


def test_config_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"space": "circle", "orders": "8,16", "gamma": 2, "p": "inf",
                               "rule": "trapezoid", "seed": 7, "trials": 20}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["wce-sweep", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["wce-sweep", "--config", str(cfg), "--orders", "8,16,32", "--out", str(b)]) == 0
    assert len(read_csv(a)) == 3
    assert len(read_csv(b)) == 4
    assert read_csv(a)[1:] == read_csv(b)[1:3]


def test_unwritable_output_exit_3(tmp_path):
    assert cli.main(SWEEP + ["--orders", "8", "--out", str(tmp_path / "missing" / "s.csv")]) == 3


def test_spectrum_exhausted_exit_3(tmp_path):
    code = cli.main(["product-defect", "--space", "circle", "--max-degree", "8", "--A", "2", "--N", "8",
                     "--out", str(tmp_path / "d.json")])
    assert code == 3


def test_verify_exit_codes(tmp_path):
    base = ["verify", "--space", "circle", "--gamma", "2", "--p", "inf", "--seed", "1", "--trials", "40"]
    assert cli.main(base + ["--rule", "trapezoid", "--orders", "8,16,32", "--out", str(tmp_path / "v.json")]) == 0
    report = json.loads((tmp_path / "v.json").read_text())
    assert report["verdict"] is True
    files = []
    for n in (8, 16, 32):
        f = tmp_path / f"m{n}.json"
        f.write_text(PointMeasure([[0.0]], [1.0]).to_json())
        files.append(str(f))
    code = cli.main(base + ["--measures", ",".join(files), "--orders", "8,16,32",
                            "--out", str(tmp_path / "bad.json")])
    assert code == 1


def test_covering_and_mesh_stats(tmp_path):
    code = cli.main(["covering", "--space", "circle", "--orders", "8,16,32", "--rule", "trapezoid",
                     "--gamma", "2", "--p", "1", "--out", str(tmp_path / "c.json")])
    assert code == 0
    assert json.loads((tmp_path / "c.json").read_text())["p_tilde"] == 1.0
    code = cli.main(["mesh-stats", "--space", "circle", "--rule", "trapezoid", "--num-nodes", "16",
                     "--out", str(tmp_path / "m.json")])
    assert code == 0
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["min_separation"] == pytest.approx(2 * math.pi / 16)


def test_product_defect_cli(tmp_path):
    assert cli.main(["product-defect", "--space", "circle", "--A", "2", "--N", "8",
                     "--out", str(tmp_path / "d.json")]) == 0
    assert json.loads((tmp_path / "d.json").read_text())["defect"] <= 1e-12


def test_kernel_profile_csv(tmp_path):
    out = tmp_path / "prof.csv"
    assert cli.main(["kernel-profile", "--space", "circle", "--N", "32", "--radii", "12",
                     "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["r", "sup_abs", "bound"]
    assert len(rows) == 13
    assert "decay_exponent" in json.loads((tmp_path / "prof.json").read_text())


def test_report_round_trip(tmp_path):
    space = circle_space(64)
    seq = {n: quadrature.trapezoid_rule(n) for n in (8, 16)}
    rep = quadrature.verify_approx_class(space, seq, 2.0, 2, trials=5, seed=1)
    path = tmp_path / "r.json"
    cli.emit_report(rep, str(path))
    doc = json.loads(path.read_text())
    assert doc == json.loads(json.dumps(rep.to_dict()))
    cli.emit_report(doc, str(tmp_path / "r2.json"))
    assert (tmp_path / "r2.json").read_bytes() == path.read_bytes()


@pytest.mark.parametrize("threads", ["1", "4"])
def test_determinism_across_runs_and_threads(tmp_path, monkeypatch, threads):
    ref = tmp_path / "ref.csv"
    monkeypatch.setenv("DIFFQUAD_THREADS", "1")
    cli.main(SWEEP + ["--trials", "50", "--out", str(ref)])
    monkeypatch.setenv("DIFFQUAD_THREADS", threads)
    again = tmp_path / "again.csv"
    cli.main(SWEEP + ["--trials", "50", "--out", str(again)])
    assert again.read_bytes() == ref.read_bytes()
    assert (tmp_path / "again.json").read_bytes() == (tmp_path / "ref.json").read_bytes()


def test_console_script(tmp_path):
    exe = shutil.which("diffquad")
    cmd = [exe] if exe else [sys.executable, "-m", "diffquad.cli"]
    proc = subprocess.run(cmd + ["product-defect", "--space", "circle", "--A", "1", "--N", "8",
                                 "--out", str(tmp_path / "d.json")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "d.json").read_text())["defect"] >= 0.1


def test_report_encodes_nonfinite(tmp_path):
    path = tmp_path / "r.json"
    cli.emit_report({"a": math.nan, "b": math.inf, "c": 0.1}, str(path))
    text = path.read_text()
    assert json.loads(text) == {"a": None, "b": "inf", "c": 0.1}
    assert "0.10000000000000001" in text
