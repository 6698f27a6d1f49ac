import io
import json

import pytest

from qvertex import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr().out
    return code, [json.loads(line) for line in out.splitlines() if line.strip()]


def test_x_identity_suite_passes(capsys):
    code, recs = run(["--suite", "X-identity", "--series-order", "3", "--no-timing"], capsys)
    assert code == 0
    summary = recs[-1]
    assert summary["type"] == "summary" and summary["ok"]
    assert summary["checks"] == len([r for r in recs if r["type"] == "check"])
    assert all(r["type"] != "timing" for r in recs)


def test_reports_are_reproducible(capsys):
    argv = ["--suite", "exchange", "--series-order", "4", "--no-timing"]
    a = run(argv, capsys)
    b = run(argv, capsys)
    assert a == b


def test_module_suite_respects_module_flag(capsys):
    code, recs = run(["--suite", "module", "--module", "2L1", "--level", "2", "--no-timing"], capsys)
    assert code == 0
    assert {r.get("source") for r in recs if r["type"] == "check"} <= {"2L1", None}


def test_normalization_suite_reports_failures(capsys):
    code, recs = run(["--suite", "normalization", "--no-timing"], capsys)
    assert code == 1
    failed = [r for r in recs if r["type"] == "check" and not r["ok"]]
    assert len(failed) == 2


def test_fail_fast_stops_after_first_failing_suite(capsys):
    code, recs = run(
        ["--suite", "normalization", "--suite", "X-identity", "--fail-fast", "--no-timing"], capsys
    )
    assert code == 1
    assert recs[-1]["aborted"]
    assert recs[-1]["suites"] == ["normalization"]


def test_numeric_suite(capsys):
    code, recs = run(["--suite", "numeric", "--numeric-q", "3/5", "--series-order", "4", "--no-timing"], capsys)
    assert code == 0
    assert recs[-1]["ok"]


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"suite": "X-identity", "series-order": 2, "timing": False}))
    code, recs = run(["--config", str(cfg), "--series-order", "3"], capsys)
    assert code == 0
    assert recs[-1]["config"]["series_order"] == 3
    assert recs[-1]["config"]["suite"] == ["X-identity"]


def test_out_file(tmp_path, capsys):
    out = tmp_path / "r.jsonl"
    assert cli.main(["--suite", "X-identity", "--series-order", "2", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert json.loads(lines[-1])["type"] == "summary"


@pytest.mark.parametrize(
    "argv",
    [
        ["--numeric-q", "1"],
        ["--numeric-q", "abc"],
        ["--numeric-q", "-2"],
        ["--level", "-1"],
        ["--jobs", "0"],
        ["--dump", "nope"],
        ["--dump", "x+0", "--tilde"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert cli.main(argv + ["--suite", "X-identity", "--series-order", "1"]) == 2
    assert "error" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["--suite", "bogus"])
    assert exc.value.code == 2


def test_bad_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": 1}))
    assert cli.main(["--config", str(cfg)]) == 2
    cfg.write_text("[1, 2]")
    assert cli.main(["--config", str(cfg)]) == 2


def test_dump_mode_operator(capsys):
    code, recs = run(["--dump", "x+0", "--module", "2L0", "--level", "1"], capsys)
    assert code == 0
    entries = [r for r in recs if r["type"] == "entry"]
    assert recs[-1]["entries"] == len(entries) > 0


def test_dump_normalized_component(capsys):
    code, recs = run(["--dump", "Phi1", "--tilde", "--module", "2L0", "--level", "0", "--z-order", "0"], capsys)
    assert code == 0
    (entry,) = [r for r in recs if r["type"] == "entry"]
    assert entry["operator"] == "Phi1~"
    assert entry["z"] == "0"


def test_dump_two_point_table(capsys):
    code, recs = run(["--dump", "omega-2pt", "--max-index", "1"], capsys)
    assert code == 0
    assert recs[-1]["entries"] == 8


def test_run_suite_direct_stream():
    cfg = cli.resolve_config(cli.build_parser().parse_args(["--suite", "X-identity", "--series-order", "1"]))
    buf = io.StringIO()
    assert cli.run_suite(cfg, buf) == 0
    assert json.loads(buf.getvalue().splitlines()[-1])["ok"]
