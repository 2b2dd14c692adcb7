import json
import subprocess
import sys

import pytest

from flexsaddle.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def four_bar_result(tmp_path_factory):
    out = tmp_path_factory.mktemp("search")
    assert run("search", "--fixture", "four-bar", "--out-dir", out) == 0
    return out


def test_search_outputs(four_bar_result):
    result = json.loads((four_bar_result / "result.json").read_text())
    assert result["converged"] and result["certificate"]["index"] == 1
    assert result["config"]["step_size"] == 0.05
    assert (four_bar_result / "history.csv").read_text().startswith("iter,energy,move_norm")
    manifest = json.loads((four_bar_result / "manifest.json").read_text())
    assert manifest["command"] == "search" and manifest["input"] == "fixture:four-bar"
    assert "wall_time" in manifest and "timestamp" not in result


def test_follow_and_render_from_result(four_bar_result, tmp_path):
    res = four_bar_result / "result.json"
    assert run("follow", res, "--out-dir", tmp_path, "--steps", 10, "--svg") == 0
    lines = (tmp_path / "path.jsonl").read_text().splitlines()
    assert len(lines) == 11
    assert (tmp_path / "path_last.svg").exists()
    assert run("render", res, "--path", tmp_path / "path.jsonl", "-o", tmp_path / "f.svg") == 0
    assert (tmp_path / "f.svg").read_text().count("<line") == 4


def test_follow_non_realizable_exits_4(four_bar_result, tmp_path):
    code = run("follow", four_bar_result / "result.json", "--coefficients", "1,0", "--out-dir", tmp_path)
    assert code == 4


def test_follow_bad_direction_exits_2(four_bar_result, tmp_path, capsys):
    assert run("follow", four_bar_result / "result.json", "--direction", 5, "--out-dir", tmp_path) == 2
    assert "out of range" in capsys.readouterr().err


def test_non_convergence_exits_3(tmp_path):
    assert run("search", "--fixture", "four-bar", "--max-iters", 5, "--out-dir", tmp_path) == 3
    assert not json.loads((tmp_path / "result.json").read_text())["converged"]


def test_input_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert run("analyze", bad) == 2
    assert "line 1, column 2" in capsys.readouterr().err
    bad.write_text('{"dim": 2, "vertices": [[0, 0]], "edges": [[0, 3]]}')
    assert run("certify", bad) == 2
    assert "edges[0][1]" in capsys.readouterr().err
    assert run("search", "--fixture", "four-bar", "--k", 2, "--out-dir", tmp_path) == 2
    assert run("analyze") == 2
    with pytest.raises(SystemExit) as exc:
        run("analyze", "--fixture", "no-such")
    assert exc.value.code == 2


def test_render_rejects_3d(tmp_path):
    doc = {"dim": 3, "vertices": [[0, 0, 0], [1, 0, 0], [0, 1, 0]], "edges": [[0, 1], [1, 2]]}
    f = tmp_path / "t.json"
    f.write_text(json.dumps(doc))
    assert run("render", f, "-o", tmp_path / "t.svg") == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("step_size = 0.04\nseed = 9\n[follow]\nsteps = 3\n")
    out = tmp_path / "a"
    assert run("search", "--fixture", "four-bar", "--config", cfg, "--out-dir", out) == 0
    snap = json.loads((out / "result.json").read_text())["config"]
    assert snap["step_size"] == 0.04 and snap["seed"] == 9
    out = tmp_path / "b"
    assert run("search", "--fixture", "four-bar", "--config", cfg, "--step-size", 0.05, "--seed", 1, "--out-dir", out) == 0
    snap = json.loads((out / "result.json").read_text())["config"]
    assert snap["step_size"] == 0.05 and snap["seed"] == 1
    bad = tmp_path / "bad.toml"
    bad.write_text("stepsize = 1\n")
    assert run("search", "--fixture", "four-bar", "--config", bad, "--out-dir", out) == 2


def test_manifest_replays_as_config(four_bar_result, tmp_path):
    manifest = four_bar_result / "manifest.json"
    assert run("search", "--fixture", "four-bar", "--config", manifest, "--out-dir", tmp_path) == 0
    assert (tmp_path / "result.json").read_bytes() == (four_bar_result / "result.json").read_bytes()


def test_json_output_and_analyze(capsys):
    assert run("analyze", "--fixture", "heptagon-1-saddle", "--json") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["rigidity_rank"] == 9 and report["self_stress_dim"] == 1
    assert run("stress-test", "--fixture", "heptagon-1-saddle", "--json") == 0
    assert len(json.loads(capsys.readouterr().out)["directions"]) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "flexsaddle", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("flexsaddle ")
