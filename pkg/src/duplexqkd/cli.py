"""Batch front-end: parse flags (optionally layered over a key=value config
file), run one seeded session, and write either the aggregate JSON report or
a per-round CSV transcript.  Identical invocations produce byte-identical
artifacts; output files are written atomically (write then rename).

Exit codes: 0 success, 1 runtime failure (I/O), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .analysis import build_report
from .attacks import EveLog
from .config import (
    AttackKind,
    AttackSpec,
    CheckKind,
    DEFAULT_SETTINGS,
    Duplex,
    ProtocolKind,
    SimulationConfig,
)
from .fourstate import ModifiedMode, ModifiedPairRecord
from .protocol import Encoder, Mode, PairRecord, run_session
from .quantum import Basis, BellStateId, ChshSettings, PauliOp

__all__ = ["RunSpec", "UsageError", "load_records_csv", "main", "parse_args", "run_cli"]

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad flags or config-file entries; message names the offending flag."""


@dataclass(frozen=True)
class RunSpec:
    config: SimulationConfig
    out_format: str
    out_path: Path | None


_FLAG_CHOICES = {
    "protocol": tuple(p.value for p in ProtocolKind),
    "attack": tuple(a.value for a in AttackKind),
    "check": tuple(c.value for c in CheckKind),
    "duplex": tuple(d.value for d in Duplex),
    "format": ("json", "csv"),
}

_DEFAULTS = {
    "protocol": "base",
    "attack": "none",
    "pairs": "10000",
    "control-prob": "0.1",
    "check": "chsh",
    "duplex": "separate",
    "seed": "0",
    "settings": None,
    "format": "json",
    "out": None,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); surface instead
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="duplexqkd", description=__doc__, add_help=True)
    parser.add_argument("--config", metavar="PATH", help="key=value file supplying any flag")
    parser.add_argument("--protocol", choices=_FLAG_CHOICES["protocol"])
    parser.add_argument("--attack", choices=_FLAG_CHOICES["attack"])
    parser.add_argument("--pairs", metavar="N")
    parser.add_argument("--control-prob", dest="control_prob", metavar="C")
    parser.add_argument("--check", choices=_FLAG_CHOICES["check"])
    parser.add_argument("--duplex", choices=_FLAG_CHOICES["duplex"])
    parser.add_argument("--seed", metavar="S")
    parser.add_argument(
        "--settings", metavar="A11,A12,A21,A22", help="CHSH angles in radians (default: maximal violation)"
    )
    parser.add_argument("--format", dest="out_format", choices=_FLAG_CHOICES["format"])
    parser.add_argument("--out", metavar="PATH", help="output path (default: stdout)")
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: line {lineno} is not key=value: {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _DEFAULTS:
            raise UsageError(f"--config: unknown key {key!r} on line {lineno}")
        values[key] = value
    return values


def _parse_int(flag: str, text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"--{flag}: not an integer: {text!r}") from exc


def _parse_float(flag: str, text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise UsageError(f"--{flag}: not a number: {text!r}") from exc


def _parse_settings(text: str) -> ChshSettings:
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError(f"--settings: expected 4 comma-separated angles, got {len(parts)}")
    a11, a12, a21, a22 = (_parse_float("settings", p) for p in parts)
    return ChshSettings(alice_angles=(a11, a12), bob_angles=(a21, a22))


def _parse_choice(flag: str, text: str) -> str:
    if text not in _FLAG_CHOICES[flag]:
        raise UsageError(f"--{flag}: invalid choice {text!r} (choose from {', '.join(_FLAG_CHOICES[flag])})")
    return text


def parse_args(argv: list[str]) -> RunSpec:
    """Resolve argv (and any --config file) into a RunSpec.

    Per-flag precedence: command line, then config file, then defaults.
    """
    namespace = _build_parser().parse_args(argv)
    file_values = _read_config_file(namespace.config) if namespace.config else {}

    def resolve(key: str, cli_value) -> str | None:
        if cli_value is not None:
            return cli_value
        return file_values.get(key, _DEFAULTS[key])

    protocol = ProtocolKind(_parse_choice("protocol", resolve("protocol", namespace.protocol)))
    attack_kind = AttackKind(_parse_choice("attack", resolve("attack", namespace.attack)))
    pairs = _parse_int("pairs", resolve("pairs", namespace.pairs))
    control_prob = _parse_float("control-prob", resolve("control-prob", namespace.control_prob))
    check = CheckKind(_parse_choice("check", resolve("check", namespace.check)))
    duplex = Duplex(_parse_choice("duplex", resolve("duplex", namespace.duplex)))
    seed = _parse_int("seed", resolve("seed", namespace.seed))
    settings_text = resolve("settings", namespace.settings)
    settings = _parse_settings(settings_text) if settings_text is not None else DEFAULT_SETTINGS
    out_format = _parse_choice("format", resolve("format", namespace.out_format))
    out_value = resolve("out", namespace.out)

    # A four-state session faces a man-in-the-middle drawing from all four
    # Bell states; the base protocol only ever sees the two it uses.
    if attack_kind in (AttackKind.QMM_SUBSTITUTE, AttackKind.QMM_SWAP) and protocol is ProtocolKind.MODIFIED:
        attack = AttackSpec(kind=attack_kind, substitute_choices=tuple(BellStateId))
    else:
        attack = AttackSpec(kind=attack_kind)

    try:
        config = SimulationConfig(
            pairs=pairs,
            control_probability=control_prob,
            check_kind=check,
            duplex=duplex,
            attack=attack,
            seed=seed,
            settings=settings,
            protocol=protocol,
        )
    except ValueError as exc:
        message = str(exc)
        flag = "--pairs" if "pairs" in message else "--control-prob" if "control" in message else "--seed"
        raise UsageError(f"{flag}: {message}") from exc

    return RunSpec(config=config, out_format=out_format, out_path=Path(out_value) if out_value else None)


# ---------------------------------------------------------------------------
# Record serialization

CSV_COLUMNS = [
    "pair_index",
    "protocol",
    "mode",
    "encoder",
    "bob_state",
    "alice_basis",
    "alice_setting",
    "alice_angle",
    "bob_setting",
    "bob_angle",
    "outcome_1",
    "outcome_2",
    "correlated",
    "bob_decoded_basis",
    "alice_decoded_state",
    "qber_pass",
    "alice_bell_outcome",
    "alice_pauli",
    "alice_target",
    "bob_decoded",
    "control_basis",
    "control_pass",
    "eve_substitute",
    "eve_bell_outcome",
    "eve_guessed_alice_bit",
    "eve_guessed_bob_bit",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (BellStateId, PauliOp)):
        return value.name.lower()
    if isinstance(value, (Basis, Mode, ModifiedMode, Encoder)):
        return value.value
    return repr(value) if isinstance(value, float) else str(value)


def _record_row(record) -> dict[str, str]:
    row = dict.fromkeys(CSV_COLUMNS, "")
    log = record.eve_log
    if log is not None:
        row["eve_substitute"] = _cell(log.substitute_state)
        row["eve_bell_outcome"] = _cell(log.bell_outcome)
        row["eve_guessed_alice_bit"] = _cell(log.guessed_alice_bit)
        row["eve_guessed_bob_bit"] = _cell(log.guessed_bob_bit)
    row["pair_index"] = _cell(record.pair_index)
    row["bob_state"] = _cell(record.bob_state)
    row["mode"] = _cell(record.mode)
    outcomes = record.outcomes
    if len(outcomes) > 0:
        row["outcome_1"] = _cell(outcomes[0])
    if len(outcomes) > 1:
        row["outcome_2"] = _cell(outcomes[1])
    if isinstance(record, PairRecord):
        row["protocol"] = "base"
        row["encoder"] = _cell(record.encoder)
        row["alice_basis"] = _cell(record.alice_basis)
        row["alice_setting"] = _cell(record.alice_setting)
        row["alice_angle"] = _cell(record.alice_angle)
        row["bob_setting"] = _cell(record.bob_setting)
        row["bob_angle"] = _cell(record.bob_angle)
        row["correlated"] = _cell(record.correlated)
        row["bob_decoded_basis"] = _cell(record.bob_decoded_basis)
        row["alice_decoded_state"] = _cell(record.alice_decoded_state)
        row["qber_pass"] = _cell(record.qber_pass)
    else:
        row["protocol"] = "modified"
        row["alice_bell_outcome"] = _cell(record.alice_bell_outcome)
        row["alice_pauli"] = _cell(record.alice_pauli)
        row["alice_target"] = _cell(record.alice_target)
        row["bob_decoded"] = _cell(record.bob_decoded)
        row["control_basis"] = _cell(record.control_basis)
        row["control_pass"] = _cell(record.control_pass)
    return row


def records_to_csv(records: list) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(_record_row(record))
    return buffer.getvalue()


def _opt(cell: str, convert):
    return convert(cell) if cell != "" else None


_STATE_BY_NAME = {state.name.lower(): state for state in BellStateId}
_PAULI_BY_NAME = {op.name.lower(): op for op in PauliOp}


def _eve_log_from_row(row: dict[str, str]) -> EveLog | None:
    cells = [row[c] for c in ("eve_substitute", "eve_bell_outcome", "eve_guessed_alice_bit", "eve_guessed_bob_bit")]
    if all(c == "" for c in cells):
        return None
    return EveLog(
        substitute_state=_opt(row["eve_substitute"], _STATE_BY_NAME.__getitem__),
        bell_outcome=_opt(row["eve_bell_outcome"], _STATE_BY_NAME.__getitem__),
        guessed_alice_bit=_opt(row["eve_guessed_alice_bit"], int),
        guessed_bob_bit=_opt(row["eve_guessed_bob_bit"], int),
    )


def load_records_csv(path) -> list:
    """Rebuild records from a CSV transcript.

    Announcement lists and Eve's observation traces are not serialized to
    CSV; everything the estimators consume round-trips.
    """
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header: {reader.fieldnames}")
        records = []
        for row in reader:
            outcomes = tuple(
                int(row[c]) for c in ("outcome_1", "outcome_2") if row[c] != ""
            )
            if row["protocol"] == "base":
                records.append(
                    PairRecord(
                        pair_index=int(row["pair_index"]),
                        mode=Mode(row["mode"]),
                        encoder=Encoder(row["encoder"]),
                        bob_state=_STATE_BY_NAME[row["bob_state"]],
                        alice_basis=_opt(row["alice_basis"], Basis),
                        alice_setting=_opt(row["alice_setting"], int),
                        alice_angle=_opt(row["alice_angle"], float),
                        bob_setting=_opt(row["bob_setting"], int),
                        bob_angle=_opt(row["bob_angle"], float),
                        outcomes=outcomes,
                        announcements=(),
                        correlated=_opt(row["correlated"], lambda c: c == "1"),
                        bob_decoded_basis=_opt(row["bob_decoded_basis"], Basis),
                        alice_decoded_state=_opt(row["alice_decoded_state"], _STATE_BY_NAME.get),
                        qber_pass=_opt(row["qber_pass"], lambda c: c == "1"),
                        eve_log=_eve_log_from_row(row),
                    )
                )
            elif row["protocol"] == "modified":
                records.append(
                    ModifiedPairRecord(
                        pair_index=int(row["pair_index"]),
                        mode=ModifiedMode(row["mode"]),
                        bob_state=_STATE_BY_NAME[row["bob_state"]],
                        alice_bell_outcome=_opt(row["alice_bell_outcome"], _STATE_BY_NAME.get),
                        alice_pauli=_opt(row["alice_pauli"], _PAULI_BY_NAME.get),
                        alice_target=_opt(row["alice_target"], _STATE_BY_NAME.get),
                        bob_decoded=_opt(row["bob_decoded"], _STATE_BY_NAME.get),
                        control_basis=_opt(row["control_basis"], Basis),
                        outcomes=outcomes,
                        control_pass=_opt(row["control_pass"], lambda c: c == "1"),
                        announcements=(),
                        eve_log=_eve_log_from_row(row),
                    )
                )
            else:
                raise ValueError(f"unknown protocol tag {row['protocol']!r}")
    return records


# ---------------------------------------------------------------------------
# Execution


def _atomic_write(path: Path, text: str) -> None:
    # Never leave a partial artifact: write a sibling temp file, then rename.
    fd, tmp_name = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def main(run: RunSpec) -> int:
    """Run the session described by ``run`` and emit its artifact."""
    records = run_session(run.config)
    if run.out_format == "json":
        report = build_report(records, run.config)
        text = json.dumps(report.to_dict(), indent=2) + "\n"
    else:
        text = records_to_csv(records)
    try:
        if run.out_path is None:
            sys.stdout.write(text)
        else:
            _atomic_write(run.out_path, text)
    except OSError as exc:
        print(f"duplexqkd: cannot write {run.out_path}: {exc.strerror}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def run_cli(argv: list[str] | None = None) -> int:
    try:
        spec = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"duplexqkd: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return main(spec)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(run_cli())
