import json

import pytest

import powerplane.cli as cli
from instances import two_clusters, walled_pair
from powerplane.io import dumps_result, load_result, mask_timings, save_problem
from powerplane.cli import main


@pytest.fixture
def problem_file(tmp_path):
    path = tmp_path / "p.json"
    save_problem(two_clusters(), path)
    return path


def masked(path):
    return dumps_result(mask_timings(json.loads(path.read_text())))


@pytest.mark.parametrize("argv", [
    ["solve-gomlp", "--seed", "7", "--generations", "2"],
    ["solve-astar", "--seed", "7"],
    ["solve-multilayer", "--seed", "7", "--generations", "1", "--auto-mcdl"],
    ["solve-multilayer", "--layers", "2", "--metric", "emd", "--linkage", "complete", "--generations", "0"],
])
def test_repeat_runs_identical_after_masking(tmp_path, problem_file, argv):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert main([argv[0], str(problem_file), *argv[1:], "--out", str(out)]) == 0
        outs.append(out)
    assert masked(outs[0]) == masked(outs[1])
    load_result(outs[0])


def test_multilayer_reports_mcdl(tmp_path):
    src = tmp_path / "x.json"
    save_problem(walled_pair(), src)
    out = tmp_path / "r.json"
    assert main(["solve-multilayer", str(src), "--auto-mcdl", "--generations", "2", "--out", str(out)]) == 0
    doc = load_result(out)
    assert doc["metrics"]["mcdl"] == 2
    assert doc["config"]["auto_mcdl"] is True


def test_stdout_when_no_out(problem_file, capsys):
    assert main(["solve-astar", str(problem_file)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kind"] == "astar" and doc["metrics"]["ei"] == 0


def test_missing_file_is_input_error(tmp_path):
    assert main(["solve-astar", str(tmp_path / "nope.json")]) == 2


def test_malformed_problem_reports_context(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"board": {"width": 1, "height": 1},\n "nets": [{"pins": [[0.1, "x"]]}]}')
    assert main(["solve-gomlp", str(bad)]) == 2
    assert "nets[0].pins[0][1]" in capsys.readouterr().err
    bad.write_text('{"board": \n')
    assert main(["solve-gomlp", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    [],
    ["solve-gomlp"],
    ["solve-multilayer", "P", "--layers", "2", "--auto-mcdl"],
    ["solve-gomlp", "P", "--elite", "40"],
    ["solve-multilayer", "P", "--layers", "9"],
    ["frobnicate"],
])
def test_usage_errors(problem_file, argv):
    argv = [str(problem_file) if a == "P" else a for a in argv]
    assert main(argv) == 1


def test_solver_failure_exit_code(problem_file, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("no")

    monkeypatch.setattr(cli, "solve_astar", boom)
    assert main(["solve-astar", str(problem_file)]) == 3


def test_generate_bench_render(tmp_path):
    suite = tmp_path / "suite"
    manifest = tmp_path / "manifest.json"
    assert main(["gen-problems", "--nets", "3", "--count", "2", "--interleave", "0",
                 "--seed", "4", "--out-dir", str(suite), "--manifest", str(manifest)]) == 0
    assert load_result(manifest)["metrics"]["files"] == ["p000.json", "p001.json"]
    report = tmp_path / "bench.json"
    assert main(["bench", "--suite-dir", str(suite), "--budget", "5", "--report", str(report)]) == 0
    doc = load_result(report)
    assert len(doc["rows"]) == 2
    assert all(set(r["timings"]) == {"gomlp", "astar"} for r in doc["rows"])
    assert 0 <= doc["metrics"]["win_or_tie_rate"] <= 1

    res = tmp_path / "g.json"
    assert main(["solve-gomlp", str(suite / "p000.json"), "--generations", "1",
                 "--snapshots", "--out", str(res)]) == 0
    svg = tmp_path / "g.svg"
    assert main(["render", "--result", str(res), "--out", str(svg), "--snapshots"]) == 0
    assert svg.read_text().startswith("<svg")
    assert any((tmp_path / "g_snapshots").iterdir())


def test_render_multilayer_writes_one_svg_per_layer(tmp_path, problem_file):
    res = tmp_path / "m.json"
    assert main(["solve-multilayer", str(problem_file), "--layers", "2",
                 "--generations", "0", "--out", str(res)]) == 0
    out = tmp_path / "layers"
    assert main(["render", "--result", str(res), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["layer_1.svg", "layer_2.svg"]


def test_render_rejects_problem_free_documents(tmp_path):
    manifest = tmp_path / "m.json"
    main(["gen-problems", "--nets", "2", "--count", "1", "--out-dir", str(tmp_path / "s"),
          "--manifest", str(manifest)])
    assert main(["render", "--result", str(manifest), "--out", str(tmp_path / "x.svg")]) == 2


def test_bench_on_empty_dir_is_input_error(tmp_path):
    assert main(["bench", "--suite-dir", str(tmp_path)]) == 2
