"""CLI tests: flag handling, config-file precedence, deterministic
artifacts, atomic writes, CSV round-trips."""

import json
import math

import pytest

from duplexqkd.analysis import build_report, estimate_chsh, estimate_qber
from duplexqkd.cli import (
    CSV_COLUMNS,
    EXIT_RUNTIME,
    EXIT_USAGE,
    RunSpec,
    UsageError,
    load_records_csv,
    main,
    parse_args,
    records_to_csv,
    run_cli,
)
from duplexqkd.config import AttackKind, CheckKind, DEFAULT_SETTINGS, ProtocolKind
from duplexqkd.protocol import run_session
from duplexqkd.quantum import BellStateId, TwoQubitDensity, bell_state, chsh_value


def test_parse_happy_path():
    spec = parse_args(
        "--protocol base --attack ir --pairs 100000 --control-prob 0.5 --check qber --seed 7".split()
    )
    config = spec.config
    assert config.pairs == 100_000
    assert config.control_probability == 0.5
    assert config.check_kind is CheckKind.QBER
    assert config.attack.kind is AttackKind.INTERCEPT_RESEND
    assert config.seed == 7
    assert spec.out_format == "json"
    assert spec.out_path is None


def test_default_settings_are_maximally_violating():
    spec = parse_args(["--pairs", "10"])
    assert spec.config.settings == DEFAULT_SETTINGS
    rho = TwoQubitDensity.from_pure(bell_state(BellStateId.PSI_PLUS))
    assert chsh_value(rho, spec.config.settings) == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def test_explicit_settings_parse():
    spec = parse_args(["--settings", "0,1.5707963267948966,2.356194490192345,0.7853981633974483"])
    assert spec.config.settings == DEFAULT_SETTINGS


@pytest.mark.parametrize(
    "argv,needle",
    [
        (["--control-prob", "1.5"], "--control-prob"),
        (["--control-prob", "abc"], "--control-prob"),
        (["--pairs", "0"], "--pairs"),
        (["--pairs", "ten"], "--pairs"),
        (["--seed", "-3"], "--seed"),
        (["--settings", "1,2,3"], "--settings"),
        (["--no-such-flag"], "--no-such-flag"),
        (["--check", "parity"], "parity"),
    ],
)
def test_rejections_name_the_flag(argv, needle):
    with pytest.raises(UsageError) as err:
        parse_args(argv)
    assert needle in str(err.value)


def test_usage_errors_exit_2(capsys):
    assert run_cli(["--control-prob", "1.5"]) == EXIT_USAGE
    message = capsys.readouterr().err
    assert message.startswith("duplexqkd:") and message.count("\n") == 1


def test_config_file_supplies_flags(tmp_path):
    config_file = tmp_path / "run.conf"
    config_file.write_text(
        "# session setup\n"
        "pairs = 123\n"
        "control-prob = 0.25\n"
        "check = qber\n"
        "attack = qmm\n"
        "seed = 9\n"
    )
    spec = parse_args(["--config", str(config_file)])
    assert spec.config.pairs == 123
    assert spec.config.control_probability == 0.25
    assert spec.config.attack.kind is AttackKind.QMM_SUBSTITUTE


def test_command_line_overrides_config_file(tmp_path):
    config_file = tmp_path / "run.conf"
    config_file.write_text("pairs=123\nseed=9\n")
    spec = parse_args(["--config", str(config_file), "--pairs", "77"])
    assert spec.config.pairs == 77
    assert spec.config.seed == 9


def test_config_file_unknown_key_rejected(tmp_path):
    config_file = tmp_path / "run.conf"
    config_file.write_text("paris=10\n")
    with pytest.raises(UsageError) as err:
        parse_args(["--config", str(config_file)])
    assert "paris" in str(err.value)


def test_missing_config_file_rejected():
    with pytest.raises(UsageError):
        parse_args(["--config", "/nonexistent/run.conf"])


def test_modified_qmm_gets_four_state_policy():
    spec = parse_args(["--protocol", "modified", "--attack", "qmm"])
    assert spec.config.attack.substitute_choices == tuple(BellStateId)
    base_spec = parse_args(["--attack", "qmm"])
    assert base_spec.config.attack.substitute_choices == (
        BellStateId.PSI_PLUS,
        BellStateId.PHI_MINUS,
    )


# ---------------------------------------------------------------------------
# Artifacts


def _spec(tmp_path, *extra) -> RunSpec:
    argv = ["--pairs", "400", "--control-prob", "0.3", "--check", "qber", "--seed", "11"]
    argv += ["--out", str(tmp_path / "report.json")]
    argv += list(extra)
    return parse_args(argv)


def test_main_writes_clean_report(tmp_path):
    spec = _spec(tmp_path)
    assert main(spec) == 0
    payload = json.loads(spec.out_path.read_text())
    assert payload["decode_accuracy_alice"] == 1.0
    assert payload["decode_accuracy_bob"] == 1.0
    assert payload["d_hat"] == 0.0
    assert payload["pairs"] == 400
    assert payload["seed"] == 11


def test_identical_specs_give_identical_bytes(tmp_path):
    spec = _spec(tmp_path)
    assert main(spec) == 0
    first = spec.out_path.read_bytes()
    assert main(spec) == 0
    assert spec.out_path.read_bytes() == first


def test_ir_qber_report_headline(tmp_path):
    spec = _spec(tmp_path, "--attack", "ir", "--pairs", "20000", "--control-prob", "0.5")
    assert main(spec) == 0
    payload = json.loads(spec.out_path.read_text())
    assert 0.23 <= payload["d_hat"] <= 0.27


def test_runtime_failure_exits_1_without_partial_file(tmp_path, capsys):
    missing_dir = tmp_path / "no" / "such" / "dir"
    spec = parse_args(["--pairs", "10", "--out", str(missing_dir / "report.json")])
    assert main(spec) == EXIT_RUNTIME
    assert not missing_dir.exists()
    assert "cannot write" in capsys.readouterr().err


def test_stdout_json_is_single_object(capsys):
    assert run_cli(["--pairs", "50", "--seed", "3"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert isinstance(payload, dict)
    assert payload["config_echo"]["pairs"] == 50


# ---------------------------------------------------------------------------
# CSV


def test_csv_row_per_record_with_fixed_header(tmp_path):
    out = tmp_path / "records.csv"
    assert run_cli(
        ["--pairs", "120", "--control-prob", "0.4", "--check", "chsh", "--seed", "5",
         "--format", "csv", "--out", str(out)]
    ) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 121


@pytest.mark.parametrize(
    "extra",
    [
        ["--check", "chsh", "--attack", "qmm-swap"],
        ["--check", "qber", "--attack", "ir"],
        ["--protocol", "modified", "--attack", "qmm"],
    ],
)
def test_csv_round_trip(tmp_path, extra):
    out = tmp_path / "records.csv"
    argv = ["--pairs", "300", "--control-prob", "0.5", "--seed", "19", "--format", "csv",
            "--out", str(out)] + extra
    assert run_cli(argv) == 0
    spec = parse_args(argv)
    records = run_session(spec.config)

    loaded = load_records_csv(out)
    assert len(loaded) == len(records)
    # Loading and re-writing is byte-stable.
    assert records_to_csv(loaded) == out.read_text()
    # Estimators see the same data through the round trip.
    report_direct = build_report(records, spec.config)
    report_loaded = build_report(loaded, spec.config)
    assert report_loaded.qber_checks == report_direct.qber_checks
    assert report_loaded.qber_errors == report_direct.qber_errors
    assert report_loaded.chsh_counts == report_direct.chsh_counts
    assert report_loaded.chsh_products == report_direct.chsh_products
    assert report_loaded.alice_decode_ok == report_direct.alice_decode_ok
    if spec.config.protocol is ProtocolKind.BASE:
        assert estimate_qber(loaded) == estimate_qber(records)
        assert estimate_chsh(loaded, spec.config.settings) == estimate_chsh(records, spec.config.settings)


def test_console_entry_point_registered():
    from importlib.metadata import entry_points

    eps = entry_points()
    scripts = eps.select(group="console_scripts") if hasattr(eps, "select") else eps["console_scripts"]
    assert any(ep.name == "duplexqkd" for ep in scripts)
