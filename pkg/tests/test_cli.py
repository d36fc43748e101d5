"""Tests for the command line interface: subcommands, files, exit codes."""

import json

import numpy as np
import pytest

from sfgraph import NumericalError, load_csv, load_sfg
from sfgraph.cli import main


def _make_dataset(tmp_path, **kwargs):
    out = tmp_path / "data"
    args = {
        "--n": "40",
        "--base": "6",
        "--clusters": "2",
        "--separation": "8.0",
        "--dup-pairs": "2",
        "--noise": "2",
        "--seed": "0",
    }
    args.update(kwargs)
    argv = ["synth"]
    for key, value in args.items():
        argv.extend([key, value])
    argv.extend(["--out", str(out)])
    assert main(argv) == 0
    return out / "data.csv", out / "labels.txt"


def test_synth_writes_dataset_labels_and_truth(tmp_path, capsys):
    data, labels = _make_dataset(tmp_path)
    assert data.exists() and labels.exists()
    truth = json.loads((data.parent / "ground_truth.json").read_text())
    assert truth["n_features"] == 10
    matrix, _ = load_csv(data)
    assert matrix.n_features == 10
    assert matrix.n_samples == 40
    assert "40x10" in capsys.readouterr().out


def test_sfg_builds_a_loadable_graph_and_angle_csv(tmp_path):
    data, _ = _make_dataset(tmp_path)
    graph_path = tmp_path / "graph.tsv"
    angles_path = tmp_path / "angles.csv"
    code = main(
        [
            "sfg",
            "--input", str(data),
            "--out", str(graph_path),
            "--angles", str(angles_path),
            "--bins", "6",
        ]
    )
    assert code == 0
    graph = load_sfg(graph_path)
    assert graph.n_nodes == 10
    assert graph.weights.nnz > 0  # the planted duplicates produce edges
    lines = angles_path.read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,count"
    assert len(lines) == 1 + 6 + 1
    assert lines[-1].split(",")[1] == "inf"


def test_lcs_and_reduce_agree_on_kept_features(tmp_path, capsys):
    data, _ = _make_dataset(tmp_path)
    graph_path = tmp_path / "graph.tsv"
    main(["sfg", "--input", str(data), "--out", str(graph_path)])
    part_path = tmp_path / "partition.txt"
    assert main(
        ["lcs", "--graph", str(graph_path), "--theta", "0.5", "--out", str(part_path)]
    ) == 0
    assert part_path.exists()
    out = capsys.readouterr().out
    assert "theta=0.5" in out

    reduced_path = tmp_path / "reduced.csv"
    assert main(
        [
            "reduce",
            "--input", str(data),
            "--graph", str(graph_path),
            "--theta", "0.5",
            "--out", str(reduced_path),
        ]
    ) == 0
    reduced, _ = load_csv(reduced_path)
    # two exact duplicate pairs are planted, so at least two columns drop
    assert reduced.n_features <= 8
    group_lines = [l for l in part_path.read_text().splitlines() if ":" not in l]
    dropped = sum(len(line.split(",")) - 1 for line in group_lines)
    assert reduced.n_features == 10 - dropped


def test_eval_sc_writes_scores(tmp_path):
    data, labels = _make_dataset(tmp_path)
    out = tmp_path / "scores.json"
    code = main(
        [
            "eval-sc",
            "--input", str(data),
            "--labels", str(labels),
            "--k", "2",
            "--out", str(out),
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["k"] == 2
    assert 0.0 <= payload["nmi"] <= 1.0
    assert 0.0 <= payload["acc"] <= 1.0
    assert payload["sigma"] > 0.0


def test_eval_sc_prints_to_stdout_without_out(tmp_path, capsys):
    data, labels = _make_dataset(tmp_path)
    capsys.readouterr()  # drain the synth status line
    assert main(
        ["eval-sc", "--input", str(data), "--labels", str(labels), "--k", "2"]
    ) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n_features"] == 10


def test_eval_sc_label_column_variant(tmp_path):
    path = tmp_path / "inline.csv"
    rng = np.random.default_rng(0)
    rows = ["f0,f1,f2,class"]
    for i in range(20):
        label = i % 2
        center = 6.0 * label
        vals = center + rng.normal(size=3)
        rows.append(",".join(repr(float(v)) for v in vals) + f",{label}")
    path.write_text("\n".join(rows) + "\n")
    out = tmp_path / "scores.json"
    code = main(
        [
            "eval-sc",
            "--input", str(path),
            "--label-column", "class",
            "--k", "2",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert json.loads(out.read_text())["n_features"] == 3


def test_eval_mcfs_uses_default_count_grid(tmp_path):
    data, labels = _make_dataset(tmp_path)
    out = tmp_path / "grid.json"
    code = main(
        [
            "eval-mcfs",
            "--input", str(data),
            "--labels", str(labels),
            "--k", "2",
            "--out", str(out),
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    counts = [rec["selected"] for rec in payload["records"]]
    assert counts == list(range(10, 61, 5))
    # m = 10 fits the 10-feature dataset; every larger m is a null record
    assert payload["records"][0]["nmi"] is not None
    assert all(rec["nmi"] is None for rec in payload["records"][1:])


def test_eval_mcfs_explicit_counts(tmp_path):
    data, labels = _make_dataset(tmp_path)
    out = tmp_path / "grid.json"
    code = main(
        [
            "eval-mcfs",
            "--input", str(data),
            "--labels", str(labels),
            "--k", "2",
            "--m", "2",
            "--m", "4",
            "--out", str(out),
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert [rec["selected"] for rec in payload["records"]] == [2, 4]
    assert all(rec["nmi"] is not None for rec in payload["records"])


def test_pipeline_writes_all_report_files(tmp_path, capsys):
    data, labels = _make_dataset(tmp_path)
    out = tmp_path / "run"
    code = main(
        [
            "pipeline",
            "--input", str(data),
            "--labels", str(labels),
            "--k", "2",
            "--theta", "0.9",
            "--theta", "0.5",
            "--m", "3",
            "--out", str(out),
        ]
    )
    assert code == 0
    for name in ("report.json", "sweep.csv", "angles.csv", "mcfs_grid.csv"):
        assert (out / name).exists(), name
    stdout = capsys.readouterr().out
    assert "baseline:" in stdout
    assert "theta=0.9" in stdout
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["thetas"] == [0.9, 0.5]
    assert report["config"]["mcfs_counts"] == [3]


def test_pipeline_config_file_with_flag_override(tmp_path):
    data, labels = _make_dataset(tmp_path)
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "\n".join(
            [
                f"input = {data}",
                f"labels = {labels}",
                "k = 2",
                "theta = 0.9,0.5",
                "seed = 5  # overridden on the command line",
                "restarts = 4",
            ]
        )
        + "\n"
    )
    out = tmp_path / "cfg_run"
    code = main(
        ["pipeline", "--config", str(cfg), "--seed", "1", "--out", str(out)]
    )
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["seed"] == 1  # flag beats file
    assert report["config"]["restarts"] == 4  # file fills the gap
    assert report["config"]["thetas"] == [0.9, 0.5]


def test_pipeline_rejects_unknown_config_key(tmp_path):
    data, _ = _make_dataset(tmp_path)
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mystery = 3\n")
    assert main(
        ["pipeline", "--config", str(cfg), "--input", str(data), "--k", "2"]
    ) == 1


def test_pipeline_require_labels_fails_before_computation(tmp_path):
    data, _ = _make_dataset(tmp_path)
    out = tmp_path / "never"
    code = main(
        [
            "pipeline",
            "--input", str(data),
            "--require-labels",
            "--k", "2",
            "--out", str(out),
        ]
    )
    assert code == 1
    assert not out.exists()


def test_pipeline_is_deterministic_across_runs(tmp_path):
    data, labels = _make_dataset(tmp_path)
    reports = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main(
            [
                "pipeline",
                "--input", str(data),
                "--labels", str(labels),
                "--k", "2",
                "--theta", "0.7",
                "--out", str(out),
            ]
        )
        assert code == 0
        parsed = json.loads((out / "report.json").read_text())
        parsed.pop("timings_ms")
        reports.append(json.dumps(parsed, sort_keys=True))
    assert reports[0] == reports[1]


# --------------------------------------------------------------------------
# exit codes


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as err:
        main(["sfg", "--out", "somewhere.tsv"])  # --input missing
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main(["unknown-command"])
    assert err.value.code == 1


def test_parameter_conflicts_exit_one(tmp_path):
    data, labels = _make_dataset(tmp_path)
    code = main(
        [
            "eval-sc",
            "--input", str(data),
            "--labels", str(labels),
            "--label-column", "0",
            "--k", "2",
        ]
    )
    assert code == 1
    graph_path = tmp_path / "graph.tsv"
    main(["sfg", "--input", str(data), "--out", str(graph_path)])
    code = main(
        [
            "lcs",
            "--graph", str(graph_path),
            "--theta", "1.5",
            "--out", str(tmp_path / "part.txt"),
        ]
    )
    assert code == 1


def test_missing_input_file_exits_two(tmp_path):
    assert main(
        ["sfg", "--input", str(tmp_path / "absent.csv"), "--out", "graph.tsv"]
    ) == 2


def test_unparseable_input_exits_two(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2\n")
    assert main(["sfg", "--input", str(bad), "--out", str(tmp_path / "g.tsv")]) == 2


def test_numerical_failure_exits_three(tmp_path, monkeypatch):
    data, labels = _make_dataset(tmp_path)

    def explode(*args, **kwargs):
        raise NumericalError("eigensolver did not converge")

    monkeypatch.setattr("sfgraph.cli.run_pipeline", explode)
    code = main(
        [
            "pipeline",
            "--input", str(data),
            "--labels", str(labels),
            "--k", "2",
            "--out", str(tmp_path / "x"),
        ]
    )
    assert code == 3
