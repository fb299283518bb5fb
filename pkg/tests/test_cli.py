import argparse
import csv
import io
import sys

import pytest

from dramtrack import cli
from dramtrack.cli import (
    ConfigError,
    _fmt,
    _parse_bool,
    _parse_values,
    load_config,
    main,
)
from dramtrack.errors import ContractViolationError


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    return list(csv.reader(io.StringIO(text)))


def test_parse_bool():
    assert _parse_bool("yes") is True
    assert _parse_bool("0") is False
    with pytest.raises(argparse.ArgumentTypeError):
        _parse_bool("maybe")


def test_parse_values_forms():
    assert _parse_values("1,2,3") == [1, 2, 3]
    assert _parse_values("5:8") == [5, 6, 7, 8]
    assert _parse_values("2:10:4") == [2, 6, 10]
    with pytest.raises(argparse.ArgumentTypeError):
        _parse_values("8:2")
    with pytest.raises(argparse.ArgumentTypeError):
        _parse_values("a,b")


def test_fmt():
    assert _fmt(None) == ""
    assert _fmt(True) == "true"
    assert _fmt(0.000123456789) == "0.000123457"
    assert _fmt(2800) == "2800"


def test_mintrh_headline(capsys):
    code, out, _ = run_cli(["mintrh", "--tracker", "mint"], capsys)
    assert code == 0
    header, row = parse_csv(out)
    record = dict(zip(header, row))
    assert record["min_trh"] == "2800"
    assert record["min_trh_d"] == "1400"
    assert record["model"] == "recurrence"


def test_mintrh_explicit_pattern(capsys):
    code, out, _ = run_cli(
        ["mintrh", "--tracker", "mint", "--transitive", "false",
         "--pattern", "p1"], capsys)
    assert code == 0
    record = dict(zip(*parse_csv(out)))
    assert record["min_trh"] == "2461"


def test_mintrh_rfm_rate(capsys):
    code, out, _ = run_cli(["mintrh", "--rfm-rate", "rfm32"], capsys)
    assert code == 0
    record = dict(zip(*parse_csv(out)))
    assert record["min_trh_d"] == "708"


def test_mintrh_tracker_list(capsys):
    code, out, _ = run_cli(
        ["mintrh", "--trackers", "prct,parfm,para,mint"], capsys)
    assert code == 0
    rows = parse_csv(out)
    d_col = rows[0].index("min_trh_d")
    assert [r[0] for r in rows[1:]] == ["prct", "parfm", "para", "mint"]
    assert [r[d_col] for r in rows[1:]] == ["623", "4096", "3731", "1400"]


def test_mintrh_empty_tracker_list(capsys):
    code, out, _ = run_cli(["mintrh", "--trackers", ""], capsys)
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 1 and rows[0][0] == "tracker"


def test_mintrh_tracker_list_conflicting_flags(capsys):
    code, _, err = run_cli(
        ["mintrh", "--trackers", "mint", "--rfm-rate", "rfm32"], capsys)
    assert code == 1
    assert "--trackers" in err


def test_invalid_parameters_exit_1(capsys):
    code, _, err = run_cli(
        ["mintrh", "--tracker", "misra_gries", "--entries", "50"], capsys)
    assert code == 1
    assert "dramtrack:" in err


def test_usage_error_exits_1(capsys):
    code, _, err = run_cli(["mintrh", "--tracker", "quadratic"], capsys)
    assert code == 1
    assert "usage" in err


def test_help_exits_0(capsys):
    code, out, _ = run_cli(["--help"], capsys)
    assert code == 0
    assert "mintrh" in out


def test_internal_error_exits_2(capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise ContractViolationError("invariant broken")

    monkeypatch.setattr(cli.analytics, "tracker_min_trh", boom)
    code, _, err = run_cli(["mintrh"], capsys)
    assert code == 2
    assert "internal error" in err


def test_config_file_round_trip(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text(
        "# threshold query\n"
        "tracker = mint\n"
        "transitive = false\n"
        "pattern = p1\n"
    )
    code_cfg, out_cfg, _ = run_cli(["mintrh", "--config", str(config)], capsys)
    code_flag, out_flag, _ = run_cli(
        ["mintrh", "--tracker", "mint", "--transitive", "false",
         "--pattern", "p1"], capsys)
    assert code_cfg == code_flag == 0
    assert out_cfg == out_flag


def test_config_flags_win(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("tracker = mint\npattern = p1\ntransitive = false\n")
    code, out, _ = run_cli(
        ["mintrh", "--config", str(config), "--pattern", "p2", "--k", "73"],
        capsys)
    assert code == 0
    record = dict(zip(*parse_csv(out)))
    assert record["pattern"] == "p2-k73"
    assert record["min_trh"] == "2764"


def test_config_unknown_key_exits_1(tmp_path, capsys):
    config = tmp_path / "run.cfg"
    config.write_text("trackr = mint\n")
    code, _, err = run_cli(["mintrh", "--config", str(config)], capsys)
    assert code == 1
    assert "unknown config key" in err


def test_config_loader_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("tracker mint\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    dup = tmp_path / "dup.cfg"
    dup.write_text("k = 1\nk = 2\n")
    with pytest.raises(ConfigError):
        load_config(str(dup))


def test_sweep_serial_matches_parallel(tmp_path):
    base = ["sweep", "--tracker", "mint", "--variable", "k",
            "--values", "1:9:4"]
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    assert main(base + ["--out", str(serial)]) == 0
    assert main(base + ["--out", str(parallel), "--jobs", "2"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_sweep_output_shape(capsys):
    code, out, _ = run_cli(
        ["sweep", "--tracker", "mint", "--variable", "k", "--values", "1,73"],
        capsys)
    assert code == 0
    rows = parse_csv(out)
    assert rows[0][0] == "k"
    assert [r[0] for r in rows[1:]] == ["1", "73"]
    assert rows[2][rows[0].index("min_trh")] == "2800"


def test_simulate_desk_scale(capsys):
    code, out, _ = run_cli(
        ["simulate", "--tracker", "mint", "--transitive", "false",
         "--pattern", "p1", "--trh", "6", "--max-act", "4", "--n-refi", "50",
         "--trials", "400", "--method", "object", "--seed", "3"], capsys)
    assert code == 0
    record = dict(zip(*parse_csv(out)))
    assert record["method"] == "object"
    assert record["trials"] == "400"
    assert 0.0 <= float(record["p_fail"]) <= 1.0
    assert record["analytic_p"] != ""


def test_simulate_parallel_byte_identical(tmp_path):
    base = ["simulate", "--tracker", "mint", "--transitive", "false",
            "--pattern", "p1", "--trh", "6", "--max-act", "4",
            "--n-refi", "40", "--trials", "600", "--method", "object"]
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    assert main(base + ["--out", str(serial)]) == 0
    assert main(base + ["--out", str(parallel), "--jobs", "3"]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_tables_comparison(tmp_path):
    assert main(["tables", "--which", "comparison",
                 "--outdir", str(tmp_path)]) == 0
    rows = parse_csv((tmp_path / "comparison.csv").read_text())
    assert rows[0][0] == "tracker"
    named = {r[0]: r for r in rows[1:]}
    d_col = rows[0].index("min_trh_d")
    assert named["mint"][d_col] == "1400"
    assert named["parfm"][d_col] == "4096"
