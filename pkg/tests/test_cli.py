import json

from engelkit.cli import main
from engelkit.distribution import CATALOG


def test_analyze_single_point(capsys):
    assert main(["analyze", "--model", "d224", "--point", "0,0,0,0"]) == 0
    out = capsys.readouterr().out
    assert "growth (2,2,4)" in out


def test_analyze_disagreement_flag(capsys):
    assert main(["analyze", "--model", "d224", "--point", "0,0,1,0"]) == 0
    out = capsys.readouterr().out
    assert "growth (2,3,4)" in out
    assert "disagree" in out


def test_analyze_engel_std(capsys):
    assert main(["analyze", "--model", "engel_std", "--point", "0,0,0,0"]) == 0
    assert "growth (2,3,4)" in capsys.readouterr().out


def test_analyze_requires_input(capsys):
    assert main(["analyze", "--model", "d224"]) == 2


def test_unknown_model_is_usage_error(capsys):
    assert main(["analyze", "--model", "nope", "--point", "0,0,0,0"]) == 2


def test_bad_point_is_usage_error(capsys):
    assert main(["analyze", "--model", "d224", "--point", "1,2,3"]) == 2


def test_analyze_grid_csv(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code = main(
        ["analyze", "--model", "d224", "--grid=-0.5:0.5:3", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# engelkit ")
    assert lines[4] == "x,y,z,w,growth,certificate,engel_by_growth,tests_disagree"
    assert len(lines) == 5 + 9


def test_char_json_report(tmp_path, capsys):
    out = tmp_path / "char.json"
    assert main(["char", "--model", "d2334a", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "printed == oracle (exact)" in text
    assert "corrected == oracle (exact)" in text
    payload = json.loads(out.read_text())
    assert payload["model"] == "d2334a"
    assert all(entry["identical"] for entry in payload["variant_pairs"])


def test_flow_csv_deterministic(tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["flow", "--model", "d2334b", "--start", "0,0,1,0", "--t", "2.0"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    a = out1.read_text()
    assert a == out2.read_text()
    assert a.startswith("# engelkit ")
    assert "rho" in capsys.readouterr().out


def test_surface_csv(tmp_path, capsys):
    out = tmp_path / "surf.csv"
    code = main(
        ["surface", "--model", "d224", "--grid", "0.05:0.1:2", "--signed", "--out", str(out)]
    )
    assert code == 0
    assert "16/16 samples converged" in capsys.readouterr().out
    header = out.read_text().splitlines()
    assert header[4] == "z,w,x,y,converged"


def test_surface_rejects_zero_grid(capsys):
    assert main(["surface", "--model", "d224", "--grid", "0:0.1:2"]) == 2


def test_endpoint_random_controls(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(
        [
            "endpoint", "--model", "engel_std", "--random", "2",
            "--n-segments", "6", "--seed", "5", "--out", str(out),
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert len(payload["results"]) == 2
    for row in payload["results"]:
        assert row["classification"] in ("SINGULAR", "REGULAR", "AMBIGUOUS")


def test_endpoint_controls_file(tmp_path, capsys):
    ctrl_file = tmp_path / "ctrl.json"
    ctrl_file.write_text(json.dumps({"n_segments": 4, "u": [[0.0, 1.0]] * 4}))
    code = main(["endpoint", "--model", "engel_std", "--controls", str(ctrl_file)])
    assert code == 0
    assert "SINGULAR" in capsys.readouterr().out


def test_endpoint_needs_a_mode(capsys):
    assert main(["endpoint", "--model", "engel_std"]) == 2


def test_endpoint_sard(tmp_path, capsys):
    out = tmp_path / "sard.json"
    cloud = tmp_path / "cloud.csv"
    code = main(
        [
            "endpoint", "--model", "d2334b", "--sard", "3",
            "--seed", "1", "--out", str(out), "--cloud", str(cloud),
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["origin_reaching_count"] == 0
    assert cloud.read_text().splitlines()[4] == "x,y,z,w,score"


def test_user_model_file(tmp_path, capsys):
    model_file = tmp_path / "model.json"
    model_file.write_text(json.dumps(CATALOG["d224"].to_json_dict()))
    assert main(["analyze", "--model", str(model_file), "--point", "0,0,0,0"]) == 0
    assert "growth (2,2,4)" in capsys.readouterr().out


def test_verify_subset(capsys):
    assert main(["verify", "--criteria", "3"]) == 0
    out = capsys.readouterr().out
    assert "criterion  3 [PASS]" in out
    assert "1/1 criteria passed" in out


def test_verify_rejects_unknown_criteria(capsys):
    assert main(["verify", "--criteria", "99"]) == 2
