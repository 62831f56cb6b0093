import csv
import json

import pytest

from poisson_stein import cli


def write(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2))
    return str(path)


BOUND = {"command": "bound", "seed": 3, "scenario": {"name": "dejong_cosine", "params": {"n": 64, "m": 8}}}


class TestValidate:
    def test_valid(self):
        assert cli.validate(BOUND) == []

    def test_reps_zero_named(self, tmp_path):
        cfg = {"command": "simulate", "seed": 1, "reps": 0, "scenario": {"name": "pairwise", "params": {"n": 16}}}
        text = json.dumps(cfg, indent=2)
        problems = cli.validate(cfg, text, "run.json")
        assert len(problems) == 1 and "'reps'" in problems[0]
        line = next(i for i, l in enumerate(text.splitlines(), 1) if '"reps"' in l)
        assert problems[0].startswith(f"run.json:{line}:")

    def test_unknown_scenario_lists_known(self):
        problems = cli.validate({"command": "bound", "seed": 0, "scenario": {"name": "boolean"}})
        assert len(problems) == 1
        for name in ("dejong_cosine", "ou_levy", "pairwise"):
            assert name in problems[0]

    def test_missing_seed(self):
        cfg = dict(BOUND)
        del cfg["seed"]
        assert any("'seed'" in p for p in cli.validate(cfg))

    def test_unknown_param(self):
        cfg = {"command": "bound", "seed": 0, "scenario": {"name": "pairwise", "params": {"radius": 0.1}}}
        assert any("radius" in p for p in cli.validate(cfg))

    def test_validate_command_exit_code(self, tmp_path, capsys):
        path = write(tmp_path, {"command": "simulate", "seed": -1, "reps": 0})
        assert cli.main(["validate", "--config", path]) == cli.EXIT_INVALID
        assert len(capsys.readouterr().out.strip().splitlines()) == 3

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\n  \"seed\": 1,\n}")
        assert cli.main(["bound", "--config", str(path)]) == cli.EXIT_INVALID


class TestCommands:
    def test_bound_report(self, tmp_path):
        out = tmp_path / "out"
        assert cli.main(["bound", "--config", write(tmp_path, BOUND), "--output", str(out)]) == 0
        result = json.loads((out / "report.json").read_text())["result"]
        assert "variance_gap" in result and "bound_value" in result
        assert any(k.startswith("contraction_norm[") for k in result)

    def test_stein_check_csv(self, tmp_path):
        cfg = {"command": "stein-check", "seed": 0, "stein": {"step": 0.01, "triples": 1000}}
        out = tmp_path / "out"
        assert cli.main(["stein-check", "--config", write(tmp_path, cfg), "--output", str(out)]) == 0
        with (out / "table.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["w", "x", "f", "fprime", "residual", "margin_upper", "margin_deriv"]
        assert len(rows) == 1 + 5 * 1601
        summary = json.loads((out / "report.json").read_text())["result"]
        assert summary["residual"] < 1e-8 and summary["increment_margin"] >= 0

    def test_rate_study_table(self, tmp_path):
        cfg = {"command": "rate-study", "seed": 4, "reps": 300,
               "scenario": {"name": "pairwise", "params": {"r": 0.1}},
               "rate_study": {"scales": [16, 32, 64], "bootstrap": 5}}
        out = tmp_path / "out"
        assert cli.main(["rate-study", "--config", write(tmp_path, cfg), "--output", str(out)]) == 0
        lines = (out / "table.csv").read_text().splitlines()
        assert lines[0] == "scale,distance,stderr" and lines[-1].startswith("# slope=")

    @pytest.mark.parametrize("command, cfg", [
        ("simulate", {"command": "simulate", "seed": 11, "reps": 3000,
                      "scenario": {"name": "pairwise", "params": {"n": 32, "d": 2}}}),
        ("bound", dict(BOUND, reps=200, bound={"theorem31": True, "z_samples": 32})),
    ])
    def test_reproducible_across_threads(self, tmp_path, command, cfg):
        path = write(tmp_path, cfg)
        reports = []
        for threads in ("1", "2"):
            out = tmp_path / f"t{threads}"
            assert cli.main([command, "--config", path, "--output", str(out), "--threads", threads]) == 0
            report = json.loads((out / "report.json").read_text())
            report.pop("timestamp")
            reports.append(report)
        assert reports[0] == reports[1]

    def test_seed_override(self, tmp_path):
        cfg = {"command": "simulate", "seed": 1, "reps": 500, "scenario": {"name": "pairwise", "params": {"n": 16}}}
        path = write(tmp_path, cfg)
        cli.main(["simulate", "--config", path, "--output", str(tmp_path / "a"), "--seed", "99"])
        assert json.loads((tmp_path / "a" / "report.json").read_text())["seed"] == 99

    def test_numerical_failure_exit_code(self, tmp_path):
        cfg = dict(BOUND, integration={"method": "tensor", "max_tensor_dim": 1})
        assert cli.main(["bound", "--config", write(tmp_path, cfg), "--output", str(tmp_path / "o")]) \
            == cli.EXIT_NUMERICAL
