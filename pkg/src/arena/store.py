"""TOML experiment configs and line-delimited run logs.

Configs are parsed strictly: every key is checked against the schema and
unknown keys are errors carrying the offending field path.  Logs are one
JSON record per line, one file per session, append-only; the reader tolerates
a trailing partial line (crash recovery) by skipping it with a warning.
"""

from __future__ import annotations

import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterator, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .agents import AgentDescriptor, AgentKind, DescriptorError, ProviderConfig
from .games import GameConfigError
from .prompts import HistoryLevel
from .session import (
    AuctionTemplate,
    BeautyContestTemplate,
    ConfigError,
    Environment,
    HistoryPolicy,
    RunRecord,
    SessionConfig,
    SessionLog,
)

log = logging.getLogger(__name__)


class ParseError(ValueError):
    pass


class SchemaError(ValueError):
    pass


class CorruptRecord(ValueError):
    def __init__(self, path: Path, line_number: int, message: str):
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = path
        self.line_number = line_number


class _Table:
    """One TOML table with strict key accounting."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise SchemaError(f"{path}: expected a table")
        self._data = dict(data)
        self._path = path

    def take(self, key: str, kind: type, default: Any = ...) -> Any:
        if key not in self._data:
            if default is ...:
                raise SchemaError(f"{self._path}.{key}: required key missing")
            return default
        value = self._data.pop(key)
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is int and isinstance(value, bool):
            raise SchemaError(f"{self._path}.{key}: expected integer, got boolean")
        if not isinstance(value, kind):
            raise SchemaError(
                f"{self._path}.{key}: expected {kind.__name__}, got {type(value).__name__}"
            )
        return value

    def subtable(self, key: str) -> Optional["_Table"]:
        if key not in self._data:
            return None
        return _Table(self._data.pop(key), f"{self._path}.{key}")

    def take_list(self, key: str, default: Any = ...) -> Any:
        return self.take(key, list, default)

    def finish(self) -> None:
        if self._data:
            stray = sorted(self._data)[0]
            raise SchemaError(f"{self._path}.{stray}: unknown key")


def _parse_game(table: _Table) -> tuple[Any, Optional[str]]:
    bc = table.subtable("beauty_contest")
    auction = table.subtable("auction")
    table.finish()
    if (bc is None) == (auction is None):
        raise SchemaError("game: exactly one of beauty_contest/auction required")
    if bc is not None:
        players = bc.take("players", int)
        template = BeautyContestTemplate(
            players=players,
            lower=bc.take("lower", float, 0.0),
            upper=bc.take("upper", float, 100.0),
            multiplier=Fraction(
                bc.take("multiplier_num", int, 2), bc.take("multiplier_den", int, 3)
            ),
            prize=bc.take("prize", float, 1.0),
        )
        group = bc.take("group", str, None)
        bc.finish()
        return template, group
    bidders = auction.take("bidders", int)
    values = auction.take_list("private_values", None)
    template = AuctionTemplate(
        bidders=bidders,
        assets=auction.take("assets", float, 100.0),
        value_mean=auction.take("value_mean", float, None),
        value_std=auction.take("value_std", float, None),
        private_values=tuple(values) if values is not None else None,
        entrance_fee=auction.take("entrance_fee", float, 0.0),
    )
    group = auction.take("group", str, None)
    auction.finish()
    return template, group


def _parse_agent(table: _Table) -> AgentDescriptor:
    name = table.take("name", str)
    kind_name = table.take("kind", str)
    try:
        kind = AgentKind(kind_name)
    except ValueError:
        raise SchemaError(f"agents.kind: unknown agent kind {kind_name!r}")
    provider = None
    if kind is AgentKind.LLM:
        provider = ProviderConfig(
            endpoint_url=table.take("endpoint_url", str),
            model_id=table.take("model_id", str),
            api_key_env=table.take("api_key_env", str, ""),
            temperature=table.take("temperature", float, 0.0),
            timeout_secs=table.take("timeout_secs", float, 30.0),
            max_transport_retries=table.take("max_transport_retries", int, 2),
            backoff_secs=table.take("backoff_secs", float, 0.25),
        )
    k = table.take("k", int, None)
    value = table.take("value", float, None)
    script = table.take_list("script", None)
    table.finish()
    return AgentDescriptor(
        name=name,
        kind=kind,
        provider=provider,
        k=k,
        value=value,
        script=tuple(script) if script is not None else None,
    )


def load_config(path: Path | str) -> SessionConfig:
    """Parse, default, and fully validate a TOML session config."""
    path = Path(path)
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError:
        raise ParseError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}")
    root = _Table(raw, "config")
    session = root.subtable("session")
    if session is None:
        raise SchemaError("session: required table missing")
    game_table = root.subtable("game")
    if game_table is None:
        raise SchemaError("game: required table missing")
    history_table = root.subtable("history")
    agents_raw = root.take_list("agents", ...)
    root.finish()

    env_name = session.take("environment", str)
    try:
        environment = Environment(env_name)
    except ValueError:
        raise SchemaError(f"session.environment: unknown environment {env_name!r}")
    seed = session.take("seed", int)
    sessions = session.take("sessions", int, 1)
    runs = session.take("runs_per_session", int, 1)
    cot = session.take("cot", bool, False)
    budget = session.take("run_budget_secs", float, 120.0)
    truncate = session.take("truncate_raw", bool, False)
    session.finish()

    game, group = _parse_game(game_table)

    history = HistoryPolicy()
    if history_table is not None:
        level_name = history_table.take("level", str, "none")
        try:
            level = HistoryLevel(level_name)
        except ValueError:
            raise SchemaError(f"history.level: unknown level {level_name!r}")
        history = HistoryPolicy(level=level, max_runs=history_table.take("max_runs", int, 3))
        history_table.finish()

    roster = []
    for index, entry in enumerate(agents_raw):
        roster.append(_parse_agent(_Table(entry, f"agents[{index}]")))
    if not roster:
        raise SchemaError("agents: at least one agent required")

    try:
        config = SessionConfig(
            game=game,
            environment=environment,
            roster=tuple(roster),
            seed=seed,
            sessions=sessions,
            runs_per_session=runs,
            history=history,
            cot=cot,
            group=group,
            run_budget_secs=budget,
            truncate_raw=truncate,
        )
        config.validate()
    except (ConfigError, DescriptorError, GameConfigError) as exc:
        raise SchemaError(str(exc))
    return config


def append_run(log_dir: Path | str, record: RunRecord) -> Path:
    """Append one record to its session's log file."""
    log_dir = Path(log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    path = log_dir / f"{record.session_id}.jsonl"
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    return path


def write_session_log(log_dir: Path | str, session: SessionLog) -> Path:
    path = None
    for record in session.runs:
        path = append_run(log_dir, record)
    return path


def read_runs(log_dir: Path | str) -> Iterator[RunRecord]:
    """Stream records from every session file, in session order."""
    log_dir = Path(log_dir)
    for path in sorted(log_dir.glob("*.jsonl")):
        yield from _read_file(path)


def _read_file(path: Path) -> Iterator[RunRecord]:
    text = path.read_text(encoding="utf-8")
    complete = text.endswith("\n")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for number, line in enumerate(lines, start=1):
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            if number == len(lines) and not complete:
                log.warning("%s:%d: skipping trailing partial record", path, number)
                return
            raise CorruptRecord(path, number, str(exc))
        yield RunRecord.from_dict(data)
