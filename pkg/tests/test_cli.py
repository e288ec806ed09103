import json

import numpy as np
import pytest

from fwcuts.cli import (
    CSV_COLUMNS,
    build_parser,
    main,
    run_audit,
    shifted_geometric_mean,
)
from fwcuts.driver import LoopConfig
from fwcuts.instances import MkpInstance, format_mknap
from fwcuts.separation import FwConfig

MICRO = format_mknap(
    [MkpInstance("m", 2, 1, [6, 4], [[3, 5]], [7], known_optimum=6)]
)


@pytest.fixture
def micro_file(tmp_path):
    path = tmp_path / "micro.mknap"
    path.write_text(MICRO)
    return str(path)


class TestShiftedGeometricMean:
    def test_constant(self):
        assert shifted_geometric_mean([1.0, 1.0, 1.0]) == pytest.approx(1.0)

    def test_two_values(self):
        assert shifted_geometric_mean([3.0, 8.0]) == pytest.approx(5.0)

    def test_empty(self):
        assert shifted_geometric_mean([]) == 0.0


class TestSeparateCommand:
    def run(self, tmp_path, point, knapsack, *flags):
        pf = tmp_path / "point.txt"
        pf.write_text(" ".join(map(str, point)))
        kf = tmp_path / "knap.txt"
        kf.write_text(" ".join(map(str, knapsack)))
        return main(["separate", str(pf), str(kf), *flags])

    def test_outside_point_exits_zero(self, tmp_path, capsys):
        code = self.run(tmp_path, [1, 1, 1], [3, 5, 2, 3, 4])
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert payload["result"] == "separated"
        cut = payload["cut"]
        assert cut["violation_at_target"] > 0
        assert len(cut["alpha"]) == 3

    def test_inside_point_exits_one(self, tmp_path, capsys):
        code = self.run(tmp_path, [0.5, 0.0, 0.0], [3, 5, 2, 3, 4])
        payload = json.loads(capsys.readouterr().out)
        assert code == 1
        assert payload["result"] == "membership"

    def test_malformed_point_exits_two(self, tmp_path):
        pf = tmp_path / "point.txt"
        pf.write_text("not a number")
        kf = tmp_path / "knap.txt"
        kf.write_text("2 5 2 3")
        assert main(["separate", str(pf), str(kf)]) == 2

    def test_weight_count_mismatch_exits_two(self, tmp_path):
        assert self.run(tmp_path, [1, 1], [3, 5, 2, 3]) == 2

    def test_normalized_cut_has_unit_max_coefficient(self, tmp_path, capsys):
        code = self.run(tmp_path, [1, 1, 1], [3, 5, 2, 3, 4], "--normalize")
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert max(abs(a) for a in payload["cut"]["alpha"]) == pytest.approx(1.0)

    def test_vanilla_flag(self, tmp_path, capsys):
        code = self.run(tmp_path, [1, 1, 1], [3, 5, 2, 3, 4], "--vanilla")
        payload = json.loads(capsys.readouterr().out)
        assert code == 0 and payload["result"] == "separated"


class TestRootGapCommand:
    def test_micro_json_reports_full_gap(self, micro_file, capsys):
        assert main(["root-gap", micro_file]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["schema_version"] == 1
        row = payload["instances"][0]
        assert row["gap_closed"] == pytest.approx(100.0, abs=1e-6)
        assert row["d_lp"] == pytest.approx(9.2)
        assert row["d_r"] == pytest.approx(6.0, abs=1e-6)

    def test_json_schema_keys_frozen(self, micro_file, capsys):
        main(["root-gap", micro_file, "--no-timings"])
        row = json.loads(capsys.readouterr().out)["instances"][0]
        assert sorted(row.keys()) == [
            "calls",
            "cuts",
            "d_lp",
            "d_r",
            "gap_closed",
            "integral_root",
            "known_optimum",
            "loop_stop",
            "m",
            "n",
            "name",
            "rounds",
            "stop_reasons",
        ]

    def test_byte_identical_reruns_without_timings(self, micro_file, capsys):
        main(["root-gap", micro_file, "--no-timings"])
        first = capsys.readouterr().out
        main(["root-gap", micro_file, "--no-timings"])
        second = capsys.readouterr().out
        assert first == second and first

    def test_csv_columns_and_block_average(self, tmp_path, capsys):
        two = format_mknap(
            [
                MkpInstance("a", 2, 1, [6, 4], [[3, 5]], [7], known_optimum=6),
                MkpInstance("b", 2, 1, [5, 4], [[3, 5]], [7], known_optimum=5),
            ]
        )
        path = tmp_path / "two.mknap"
        path.write_text(two)
        assert main(["root-gap", str(path), "--csv", "--no-timings"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 4  # header, two instances, one (n, m) block average
        assert lines[3].startswith("block(n=2;m=1)")

    def test_parse_failure_exits_two(self, tmp_path):
        bad = tmp_path / "bad.mknap"
        bad.write_text("1  2 1 10  6 4  3")
        assert main(["root-gap", str(bad)]) == 2

    def test_out_file(self, micro_file, tmp_path):
        out = tmp_path / "report.json"
        assert main(["root-gap", micro_file, "--out", str(out)]) == 0
        assert json.loads(out.read_text())["command"] == "root-gap"

    def test_vanilla_flag_still_valid(self, micro_file, capsys):
        assert main(["root-gap", micro_file, "--vanilla", "--no-early-stop"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["instances"][0]["gap_closed"] is not None


class TestAuditCommand:
    def test_clean_run_exits_zero(self, micro_file, capsys):
        assert main(["audit", micro_file]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["failed"] == []
        assert all(c["passed"] for c in payload["checks"])

    def test_empty_file_warns_and_passes(self, tmp_path, capsys):
        empty = tmp_path / "none.mknap"
        empty.write_text("0")
        assert main(["audit", str(empty)]) == 0
        captured = capsys.readouterr()
        assert "warning" in captured.err
        assert json.loads(captured.out)["checks"] == []

    def test_corrupted_cut_fails_named_invariant(self, micro_file):
        import dataclasses

        from fwcuts.instances import parse_mknap

        instances = parse_mknap(open(micro_file).read())

        def corrupt(report):
            pool = tuple(
                dataclasses.replace(rec, beta=rec.beta - 10.0) for rec in report.cut_pool
            )
            return dataclasses.replace(report, cut_pool=pool)

        ok, results = run_audit(instances, FwConfig(), LoopConfig(max_rounds=5), corrupt)
        assert not ok
        failed = [c.name for _, checks in results for c in checks if not c.passed]
        assert "cut-validity-dp" in failed

    def test_cli_exit_three_on_failed_invariant(self, micro_file, monkeypatch, capsys):
        import fwcuts.cli as cli
        from fwcuts.driver import AuditCheck

        def fake_run_audit(instances, fw, loop, cut_transform=None):
            return False, [(instances[0], [AuditCheck("cut-validity-dp", False, 1, "boom")])]

        monkeypatch.setattr(cli, "run_audit", fake_run_audit)
        assert main(["audit", micro_file]) == 3
        assert "cut-validity-dp" in capsys.readouterr().err


class TestBenchCommand:
    def test_bench_reports_shifted_means(self, micro_file, capsys):
        assert main(["bench", micro_file]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["command"] == "bench"
        assert payload["shifted_geometric_means"]["shift"] == 1.0
        assert payload["shifted_geometric_means"]["time"] >= 0.0


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["frobnicate"])
