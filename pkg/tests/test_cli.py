"""Command-line interface: outputs, formats, exit codes, determinism."""

import csv
import io
import json
import os
import subprocess
import sys

import pytest

from hiermed.cli import main
from hiermed.criterion import a_criterion
from hiermed.model import ApproxDesign, ModelDims, VarianceRatios


def run_cli(*args, env_extra=None):
    """Run the CLI in a subprocess; returns (exit code, stdout, stderr)."""
    env = dict(os.environ)
    env.pop("HIERMED_THREADS", None)
    if env_extra:
        env.update(env_extra)
    proc = subprocess.run(
        [sys.executable, "-m", "hiermed", *args],
        capture_output=True,
        text=False,
        env=env,
    )
    return proc.returncode, proc.stdout, proc.stderr


TWO_CENTER_CSV = "center,group,y\n" + "".join(
    "1,T,2\n" for _ in range(5)
) + "".join(
    "1,C,0\n" for _ in range(5)
) + "".join(
    "2,T,0\n" for _ in range(5)
) + "".join(
    "2,C,0\n" for _ in range(5)
)


class TestOptimize:
    def test_text_output(self):
        code, out, _ = run_cli("optimize", "--K", "50", "--N", "10", "--u", "0.25", "--v", "2")
        assert code == 0
        lines = dict(line.split(" = ") for line in out.decode().strip().splitlines())
        assert float(lines["w_star"]) == pytest.approx(0.682, abs=1e-3)
        assert float(lines["phi_star"]) == pytest.approx(12.718, abs=1e-3)

    def test_exact_designs_reported(self):
        code, out, _ = run_cli(
            "optimize", "--K", "50", "--N", "10", "--u", "0.25", "--v", "2",
            "--exact", "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["exact"]["n_star"] == 7
        assert payload["exact"]["runner_up"]["n"] == 6
        assert payload["exact"]["phi"] < payload["exact"]["runner_up"]["phi"]

    def test_symmetric_single_center(self):
        code, out, _ = run_cli(
            "optimize", "--K", "1", "--N", "10", "--u", "1", "--v", "1", "--format", "json"
        )
        assert code == 0
        assert json.loads(out)["w_star"] == 0.5

    def test_vanishing_effect_variance(self):
        code, out, _ = run_cli(
            "optimize", "--K", "50", "--N", "10", "--u", "0.25", "--v", "1e-12",
            "--format", "json",
        )
        assert code == 0
        assert json.loads(out)["w_star"] == pytest.approx(0.5, abs=1e-3)

    def test_invalid_flag_exits_two(self):
        code, _, err = run_cli("optimize", "--K", "0", "--N", "10", "--u", "1", "--v", "1")
        assert code == 2
        assert b"K" in err

    def test_missing_flag_exits_two(self):
        code, _, _ = run_cli("optimize", "--K", "5", "--N", "10", "--u", "1")
        assert code == 2

    def test_unsupported_format_exits_two(self):
        code, _, err = run_cli(
            "optimize", "--K", "5", "--N", "10", "--u", "1", "--v", "1", "--format", "csv"
        )
        assert code == 2
        assert b"format" in err


class TestCriterionCommand:
    def test_rate_evaluation(self):
        code, out, _ = run_cli(
            "criterion", "--K", "50", "--N", "10", "--u", "0.25", "--v", "0.5",
            "--w", "0.5", "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["phi"] == pytest.approx(9.797260273972602, rel=1e-12)
        assert payload["average_part"] == pytest.approx(0.4)

    def test_exact_size_evaluation(self):
        code, out, _ = run_cli(
            "criterion", "--K", "50", "--N", "10", "--u", "0.25", "--v", "0.5",
            "--n", "5", "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["n"] == 5 and payload["w"] == 0.5

    def test_requires_exactly_one_design(self):
        base = ("criterion", "--K", "5", "--N", "10", "--u", "1", "--v", "1")
        assert run_cli(*base)[0] == 2
        assert run_cli(*base, "--w", "0.5", "--n", "5")[0] == 2


class TestEfficiencyCommand:
    def test_reference_default_balanced(self):
        code, out, _ = run_cli(
            "efficiency", "--K", "50", "--N", "10", "--u", "0.25", "--v", "2",
            "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["efficiency"] == pytest.approx(0.9357, abs=1e-4)
        assert payload["w_ref"] == 0.5

    def test_optimal_reference_gives_one(self):
        code, out, _ = run_cli(
            "efficiency", "--K", "1", "--N", "10", "--u", "1", "--v", "1", "--format", "json"
        )
        assert code == 0
        assert json.loads(out)["efficiency"] == pytest.approx(1.0, rel=1e-12)


class TestSweepCommand:
    def test_header_and_shape(self):
        code, out, _ = run_cli(
            "sweep", "--axis", "v", "--fixed", "0.01,0.25", "--grid", "5",
            "--K", "50", "--N", "10",
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out.decode())))
        assert rows[0] == [
            "axis", "r", "ratio", "u", "v", "w_star", "phi_star", "phi_balanced", "efficiency",
        ]
        assert len(rows) == 1 + 2 * 5
        assert {row[0] for row in rows[1:]} == {"v"}

    def test_single_point_grid(self):
        code, out, _ = run_cli(
            "sweep", "--axis", "v", "--fixed", "0.25", "--grid", "1", "--K", "50", "--N", "10"
        )
        assert code == 0
        row = list(csv.reader(io.StringIO(out.decode())))[1]
        assert float(row[1]) == 0.5  # half-offset grid of one point
        assert float(row[4]) == pytest.approx(1.0)  # v = r/(1-r) = 1
        assert 0.0 < float(row[8]) <= 1.0

    def test_round_trip_reproduces_phi(self):
        code, out, _ = run_cli(
            "sweep", "--axis", "v", "--fixed", "0.25,1.5", "--grid", "7",
            "--K", "50", "--N", "10",
        )
        assert code == 0
        for row in list(csv.reader(io.StringIO(out.decode())))[1:]:
            u, v, w_star, phi_star = (float(row[i]) for i in (3, 4, 5, 6))
            again = a_criterion(ModelDims(50, 10), VarianceRatios(u, v), ApproxDesign(w_star))
            assert abs(again.phi - phi_star) < 1e-9

    def test_five_curve_sweep_monotone(self):
        # the canonical five-curve table: each block's w* climbs with v
        code, out, _ = run_cli(
            "sweep", "--axis", "v", "--fixed", "0.01,0.1,0.25,0.5,1.5",
            "--grid", "99", "--K", "50", "--N", "10",
        )
        assert code == 0
        rows = list(csv.reader(io.StringIO(out.decode())))[1:]
        assert len(rows) == 5 * 99
        by_u = {}
        for row in rows:
            by_u.setdefault(row[3], []).append(float(row[5]))
        assert len(by_u) == 5
        for rates in by_u.values():
            assert all(b >= a for a, b in zip(rates, rates[1:]))

    def test_malformed_grid_exits_two(self):
        assert run_cli(
            "sweep", "--axis", "v", "--fixed", "0.1,oops", "--grid", "3",
            "--K", "5", "--N", "10",
        )[0] == 2
        assert run_cli(
            "sweep", "--axis", "v", "--fixed", "0.1", "--grid", "0", "--K", "5", "--N", "10"
        )[0] == 2


class TestPredictCommand:
    def test_worked_example(self, tmp_path):
        data = tmp_path / "trial.csv"
        data.write_text(TWO_CENTER_CSV, encoding="utf-8")
        code, out, _ = run_cli("predict", "--data", str(data), "--u", "0.25", "--v", "0.5")
        assert code == 0
        rows = list(csv.reader(io.StringIO(out.decode())))
        assert rows[0] == ["center", "mu_hat", "alpha_hat"]
        by_center = {row[0]: row for row in rows[1:]}
        assert float(by_center["1"][2]) == pytest.approx(1.61644, abs=1e-5)
        assert float(by_center["2"][2]) == pytest.approx(0.38356, abs=1e-5)
        assert float(by_center["population"][2]) == pytest.approx(1.0)

    def test_constant_data_gives_zero_effects(self, tmp_path):
        data = tmp_path / "flat.csv"
        lines = ["center,group,y"]
        for center in (1, 2, 3):
            lines += [f"{center},T,4.25", f"{center},T,4.25", f"{center},C,4.25"]
        data.write_text("\n".join(lines) + "\n", encoding="utf-8")
        code, out, _ = run_cli(
            "predict", "--data", str(data), "--u", "1", "--v", "1", "--format", "json"
        )
        assert code == 0
        payload = json.loads(out)
        for entry in payload["centers"]:
            assert entry["alpha_hat"] == pytest.approx(0.0, abs=1e-12)
            assert entry["mu_hat"] == pytest.approx(4.25)

    def test_missing_group_exits_three(self, tmp_path):
        data = tmp_path / "bad.csv"
        data.write_text("center,group,y\n1,T,1\n1,C,2\n2,T,3\n", encoding="utf-8")
        code, _, err = run_cli("predict", "--data", str(data), "--u", "1", "--v", "1")
        assert code == 3
        assert b"center 2" in err

    def test_unbalanced_layout_exits_three(self, tmp_path):
        data = tmp_path / "bad.csv"
        data.write_text(
            "center,group,y\n1,T,1\n1,C,2\n2,T,3\n2,T,4\n2,C,5\n", encoding="utf-8"
        )
        code, _, err = run_cli("predict", "--data", str(data), "--u", "1", "--v", "1")
        assert code == 3
        assert b"center 2" in err

    def test_malformed_file_exits_three(self, tmp_path):
        data = tmp_path / "bad.csv"
        data.write_text("middle,group,y\n1,T,1\n", encoding="utf-8")
        assert run_cli("predict", "--data", str(data), "--u", "1", "--v", "1")[0] == 3
        data.write_text("center,group,y\n1,X,1\n", encoding="utf-8")
        assert run_cli("predict", "--data", str(data), "--u", "1", "--v", "1")[0] == 3
        assert run_cli("predict", "--data", str(tmp_path / "nope.csv"), "--u", "1", "--v", "1")[0] == 3


class TestSimulateCommand:
    ARGS = (
        "simulate", "--K", "10", "--N", "4", "--u", "0.25", "--v", "0.5",
        "--n", "2", "--reps", "400", "--seed", "42",
    )

    def test_report_fields(self):
        code, out, _ = run_cli(*self.ARGS)
        assert code == 0
        payload = json.loads(out)
        assert payload["replications"] == 400
        assert payload["within_three_se"] is True
        assert payload["standard_error"] > 0

    def test_byte_identical_reruns(self):
        first = run_cli(*self.ARGS)
        second = run_cli(*self.ARGS)
        assert first == second

    def test_single_replication_legal(self):
        # one replication: no standard error is estimable, serialized as null
        code, out, _ = run_cli(
            "simulate", "--K", "5", "--N", "4", "--u", "0.1", "--v", "0.1",
            "--n", "2", "--reps", "1", "--seed", "1",
        )
        assert code == 0
        assert json.loads(out)["standard_error"] is None

    def test_invalid_reps_exits_two(self):
        code, _, _ = run_cli(
            "simulate", "--K", "5", "--N", "4", "--u", "0.1", "--v", "0.1",
            "--n", "2", "--reps", "0", "--seed", "1",
        )
        assert code == 2


class TestOutputPlumbing:
    def test_out_file(self, tmp_path):
        target = tmp_path / "result.json"
        code, out, _ = run_cli(
            "optimize", "--K", "5", "--N", "10", "--u", "1", "--v", "1",
            "--format", "json", "--out", str(target),
        )
        assert code == 0
        assert out == b""
        payload = json.loads(target.read_text(encoding="utf-8"))
        assert "w_star" in payload

    def test_lf_line_endings(self):
        _, out, _ = run_cli(
            "sweep", "--axis", "v", "--fixed", "0.25", "--grid", "2", "--K", "5", "--N", "10"
        )
        assert b"\r" not in out

    def test_thread_hint_does_not_change_output(self):
        args = ("sweep", "--axis", "q", "--fixed", "0.5", "--grid", "4", "--K", "20", "--N", "5")
        base = run_cli(*args)
        for value in ("1", "4", "99", "not-a-number"):
            assert run_cli(*args, env_extra={"HIERMED_THREADS": value}) == base

    def test_inprocess_main_matches_subprocess(self, capsys):
        code = main(["criterion", "--K", "2", "--N", "4", "--u", "0.5", "--v", "0.5", "--w", "0.25"])
        captured = capsys.readouterr()
        assert code == 0
        _, sub_out, _ = run_cli(
            "criterion", "--K", "2", "--N", "4", "--u", "0.5", "--v", "0.5", "--w", "0.25"
        )
        assert captured.out.encode() == sub_out
