"""Command-line interface, driven through main(argv)."""

import json
import subprocess
import sys

import numpy as np
import pytest

from hamlink import demo_problem, save_problem
from hamlink.cli import main


@pytest.fixture()
def demo_paths(tmp_path):
    problem = tmp_path / "demo.json"
    save_problem(demo_problem(), problem)
    return problem, tmp_path / "demo.report.json"


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExample:
    def test_writes_problem_and_prints_expectations(self, tmp_path, capsys):
        out_path = tmp_path / "p.json"
        code, out, err = run(["example", "--output", str(out_path)], capsys)
        assert code == 0
        assert out_path.exists()
        assert "channel count" in out
        assert "22.9" in out

    def test_default_output_name(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code, out, _ = run(["example"], capsys)
        assert code == 0
        assert (tmp_path / "demo_problem.json").exists()


class TestSynth:
    def test_synthesizes_and_reports(self, demo_paths, capsys):
        problem, report = demo_paths
        code, out, _ = run(["synth", str(problem)], capsys)
        assert code == 0
        assert report.exists()
        assert "verdict: PASS" in out
        assert "drift_residual" in out
        doc = json.loads(report.read_text())
        assert doc["m"] == 2
        assert doc["verification"]["passed"] is True

    def test_explicit_output_path(self, demo_paths, tmp_path, capsys):
        problem, _ = demo_paths
        target = tmp_path / "custom.json"
        code, _, _ = run(["synth", str(problem), "-o", str(target)], capsys)
        assert code == 0
        assert target.exists()

    def test_infeasible_channel_count_is_exit_2(self, demo_paths, capsys):
        problem, _ = demo_paths
        code, _, err = run(["synth", str(problem), "--m", "1"], capsys)
        assert code == 2
        assert "at least m=2" in err

    def test_oversized_channel_count_is_exit_1(self, demo_paths, capsys):
        problem, _ = demo_paths
        code, _, err = run(["synth", str(problem), "--m", "3"], capsys)
        assert code == 1
        assert "exceeds" in err

    def test_free_parameters_land_in_provenance(self, demo_paths, capsys):
        problem, report = demo_paths
        code, _, _ = run(
            ["synth", str(problem), "--m", "2", "--y1", "0.5,2", "--y2", "1,1"],
            capsys,
        )
        assert code == 0
        recorded = json.loads(report.read_text())["provenance"]["options"]
        assert recorded["m"] == 2
        assert recorded["y1"] == [0.5, 2.0]
        assert recorded["y2"] == [1.0, 1.0]

    def test_p_matrix_file(self, demo_paths, tmp_path, capsys):
        problem, report = demo_paths
        p_path = tmp_path / "p_mix.json"
        # quadrature embedding of the unitary diag(1, -1): orthogonal and symplectic
        p_path.write_text(json.dumps(np.diag([1.0, -1.0, 1.0, -1.0]).tolist()))
        code, out, _ = run(["synth", str(problem), "--p-matrix", str(p_path)], capsys)
        assert code == 0
        assert "verdict: PASS" in out
        recorded = json.loads(report.read_text())["provenance"]["options"]
        assert recorded["p"][0][0] == 1.0

    def test_bad_csv_is_exit_1(self, demo_paths, capsys):
        problem, _ = demo_paths
        code, _, err = run(["synth", str(problem), "--y1", "0.5,abc"], capsys)
        assert code == 1
        assert "comma-separated numbers" in err

    def test_zero_coupling_gives_empty_loop(self, demo_paths, tmp_path, capsys):
        problem, _ = demo_paths
        doc = json.loads(problem.read_text())
        doc["r_ab"] = np.zeros((4, 6)).tolist()
        decoupled = tmp_path / "decoupled.json"
        decoupled.write_text(json.dumps(doc))
        code, out, _ = run(["synth", str(decoupled)], capsys)
        assert code == 0
        assert "verdict: PASS" in out
        report = json.loads((tmp_path / "decoupled.report.json").read_text())
        assert report["m"] == 0

    def test_missing_file_is_exit_1(self, tmp_path, capsys):
        code, _, err = run(["synth", str(tmp_path / "absent.json")], capsys)
        assert code == 1
        assert "cannot read" in err

    def test_malformed_file_is_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"format": "hamlink-problem", "format_version": 1}')
        code, _, err = run(["synth", str(bad)], capsys)
        assert code == 1
        assert "missing field" in err


class TestBatch:
    def test_worst_exit_code_wins(self, tmp_path, capsys):
        save_problem(demo_problem(), tmp_path / "good.json")
        doc = json.loads((tmp_path / "good.json").read_text())
        doc["options"] = {"m": 1}
        (tmp_path / "tight.json").write_text(json.dumps(doc))
        code, out, err = run(["synth", "--batch", str(tmp_path)], capsys)
        assert code == 2
        assert "batch: 2 problems, worst exit code 2" in out
        assert (tmp_path / "good.report.json").exists()
        assert not (tmp_path / "tight.report.json").exists()
        assert "at least m=2" in err

    def test_reports_are_not_reprocessed(self, tmp_path, capsys):
        save_problem(demo_problem(), tmp_path / "solo.json")
        code, out, _ = run(["synth", "--batch", str(tmp_path)], capsys)
        assert code == 0
        code, out, _ = run(["synth", "--batch", str(tmp_path)], capsys)
        assert code == 0
        assert "batch: 1 problems" in out

    def test_empty_directory_is_exit_1(self, tmp_path, capsys):
        code, _, err = run(["synth", "--batch", str(tmp_path)], capsys)
        assert code == 1
        assert "no problem documents" in err

    def test_batch_and_positional_conflict(self, tmp_path, capsys):
        code, _, err = run(["synth", "x.json", "--batch", str(tmp_path)], capsys)
        assert code == 1


class TestVerify:
    def test_clean_report_passes(self, demo_paths, capsys):
        problem, report = demo_paths
        assert run(["synth", str(problem)], capsys)[0] == 0
        code, out, _ = run(["verify", str(problem), str(report)], capsys)
        assert code == 0
        assert "verdict: PASS" in out

    def test_corrupted_report_fails_with_named_check(self, demo_paths, capsys):
        problem, report = demo_paths
        run(["synth", str(problem)], capsys)
        doc = json.loads(report.read_text())
        doc["sigma"][0][0] = 0.5
        report.write_text(json.dumps(doc))
        code, out, _ = run(["verify", str(problem), str(report)], capsys)
        assert code == 3
        assert "verdict: FAIL" in out
        assert "drift_residual" in out

    def test_simulate_flag_adds_moment_check(self, demo_paths, capsys):
        problem, report = demo_paths
        run(["synth", str(problem)], capsys)
        code, out, _ = run(
            ["verify", str(problem), str(report), "--simulate", "0.5", "1e-3"],
            capsys,
        )
        assert code == 0
        assert "moment_residual" in out
        assert "verdict: PASS" in out

    def test_dimension_mismatch_is_exit_1(self, demo_paths, tmp_path, capsys):
        problem, report = demo_paths
        run(["synth", str(problem)], capsys)
        doc = json.loads(problem.read_text())
        doc["n_a"] = 3
        doc["r_bar_a"] = np.zeros((6, 6)).tolist()
        doc["c_bar_a"] = (np.sqrt(80.0) * np.eye(6)).tolist()
        doc["d_bar_a"] = np.eye(6).tolist()
        doc["r_ab"] = np.zeros((6, 6)).tolist()
        bigger = tmp_path / "bigger.json"
        bigger.write_text(json.dumps(doc))
        code, _, err = run(["verify", str(bigger), str(report)], capsys)
        assert code == 1
        assert "realization couples 2 + 3 modes, problem has 3 + 3" in err

    def test_mismatched_documents_fail(self, demo_paths, tmp_path, capsys):
        problem, report = demo_paths
        run(["synth", str(problem)], capsys)
        other = tmp_path / "other.json"
        doc = json.loads(problem.read_text())
        doc["r_ab"][0][0] = 40.0
        other.write_text(json.dumps(doc))
        code, out, _ = run(["verify", str(other), str(report)], capsys)
        assert code == 3
        assert "verdict: FAIL" in out


class TestSimulate:
    def test_plain_run_prints_summary(self, demo_paths, capsys):
        problem, _ = demo_paths
        code, out, _ = run(
            ["simulate", str(problem), "--t-final", "0.2", "--dt", "1e-3"],
            capsys,
        )
        assert code == 0
        assert "200 steps" in out
        assert "cov trace" in out

    def test_trajectory_output(self, demo_paths, tmp_path, capsys):
        problem, _ = demo_paths
        traj = tmp_path / "traj.json"
        code, _, _ = run(
            [
                "simulate", str(problem), "--t-final", "0.1", "--dt", "0.05",
                "--output", str(traj),
            ],
            capsys,
        )
        assert code == 0
        doc = json.loads(traj.read_text())
        assert doc["format"] == "hamlink-trajectory"
        assert len(doc["times"]) == 3
        assert len(doc["means"]) == 3
        assert len(doc["covariances"][0]) == 10

    def test_comparison_mode(self, demo_paths, capsys):
        problem, report = demo_paths
        run(["synth", str(problem)], capsys)
        code, out, _ = run(
            [
                "simulate", str(problem), "--realization", str(report),
                "--t-final", "0.5", "--dt", "1e-3",
            ],
            capsys,
        )
        assert code == 0
        assert "moment deviation" in out
        assert " ok" in out

    def test_comparison_failure_is_exit_3(self, demo_paths, capsys):
        problem, report = demo_paths
        run(["synth", str(problem)], capsys)
        doc = json.loads(report.read_text())
        doc["c_a"][0][0] += 0.05
        report.write_text(json.dumps(doc))
        code, out, _ = run(
            [
                "simulate", str(problem), "--realization", str(report),
                "--t-final", "0.5", "--dt", "1e-3",
            ],
            capsys,
        )
        assert code == 3
        assert "FAIL" in out


class TestTopLevel:
    def test_no_arguments_prints_help(self, capsys):
        code, out, _ = run([], capsys)
        assert code == 1
        assert "usage" in out.lower()

    def test_version_subprocess(self):
        result = subprocess.run(
            [sys.executable, "-m", "hamlink", "--version"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0
        assert "0.1.0" in result.stdout
