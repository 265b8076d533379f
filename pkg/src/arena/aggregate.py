"""Aggregation of run logs into per-agent summary rows and exports.

Rows are keyed by (agent, environment, game, group) and computed entirely
through the metrics module, so re-running aggregation over re-read logs
reproduces the same rows bit for bit.  Violation cells count toward the
rule-break rate but are excluded from payoff, deviation, and win-rate
denominators; transport failures are excluded from all of them.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import metrics
from .session import RunRecord


class EmptyInput(ValueError):
    pass


@dataclass(frozen=True)
class SummaryRow:
    agent_name: str
    environment: str
    game: str
    group: Optional[str]
    n_sessions: int
    n_runs: int
    mean_payoff: Optional[float]
    payoff_ratio: Optional[float]
    mean_deviation: Optional[float]
    rule_break_pct: float
    win_rate: Optional[float]
    completed: bool


@dataclass
class _Cell:
    session_id: str
    payoff: Optional[float]
    ne_payoff: float
    deviation: Optional[float]
    violated: bool
    transport_failed: bool
    answered: bool
    won: bool
    valid: bool


def _cells(records: Iterable[RunRecord]) -> dict[tuple, list[_Cell]]:
    grouped: dict[tuple, list[_Cell]] = {}
    for record in records:
        for seat, seat_record in enumerate(record.seats):
            key = (
                seat_record.agent_name,
                record.environment,
                record.game["kind"],
                record.group,
            )
            grouped.setdefault(key, []).append(
                _Cell(
                    session_id=record.session_id,
                    payoff=record.payoffs[seat],
                    ne_payoff=record.ne_payoffs[seat],
                    deviation=record.deviations[seat],
                    violated=seat_record.violation is not None,
                    transport_failed=seat_record.transport_error is not None,
                    answered=seat_record.parsed_action is not None,
                    won=seat in record.winners,
                    valid=record.valid,
                )
            )
    return grouped


def aggregate(records: Iterable[RunRecord]) -> list[SummaryRow]:
    """Summary rows in deterministic (lexicographic key) order."""
    grouped = _cells(records)
    if not grouped:
        raise EmptyInput("no run records")
    rows = []
    for key in sorted(grouped, key=lambda k: (k[0], k[1], k[2], k[3] or "")):
        agent, environment, game, group = key
        cells = grouped[key]
        attempts = [c for c in cells if not c.transport_failed]
        included = [c for c in cells if c.answered and c.valid and c.payoff is not None]
        # Sweeps vary the equilibrium payoff per session, so the ratio is
        # taken against the mean equilibrium payoff of the same cells.
        optimal = statistics.mean(c.ne_payoff for c in included) if included else 1.0
        summary = metrics.summarize_agent(
            agent,
            payoffs=[c.payoff for c in included],
            optimal=optimal,
            deviations=[c.deviation for c in included if c.deviation is not None],
            violated=[c.violated for c in attempts],
            wins=[c.won for c in included],
        )
        rows.append(
            SummaryRow(
                agent_name=agent,
                environment=environment,
                game=game,
                group=group,
                n_sessions=len({c.session_id for c in cells}),
                n_runs=len(cells),
                mean_payoff=summary.mean_payoff,
                payoff_ratio=summary.payoff_ratio,
                mean_deviation=summary.mean_deviation,
                rule_break_pct=summary.rule_break_pct,
                win_rate=summary.win_rate,
                completed=summary.completed,
            )
        )
    return rows


SUMMARY_COLUMNS = [
    "agent_name",
    "environment",
    "game",
    "group",
    "n_sessions",
    "n_runs",
    "mean_payoff",
    "payoff_ratio",
    "mean_deviation",
    "rule_break_pct",
    "win_rate",
    "completed",
]


def _format_cell(column: str, value) -> str:
    if value is None:
        return ""
    if column == "rule_break_pct":
        return f"{value:.2f}"
    if column == "completed":
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_summary(rows: Sequence[SummaryRow], path: Path | str, format: str = "csv") -> Path:
    """Write summary rows; percentages carry exactly 2 decimals."""
    if not rows:
        raise EmptyInput("no summary rows")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(SUMMARY_COLUMNS)
            for row in rows:
                data = asdict(row)
                writer.writerow([_format_cell(c, data[c]) for c in SUMMARY_COLUMNS])
    elif format == "structured-summary":
        payload = []
        for row in rows:
            data = asdict(row)
            data["rule_break_pct"] = round(row.rule_break_pct, 2)
            payload.append(data)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown export format {format!r}")
    return path


def export_samples(records: Iterable[RunRecord], path: Path | str) -> Path:
    """Per-cell deviation samples for distribution plots."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["agent_name", "environment", "game", "group", "session_id", "run_index", "seat", "deviation"]
        )
        for record in records:
            for seat, seat_record in enumerate(record.seats):
                if record.deviations[seat] is None:
                    continue
                writer.writerow(
                    [
                        seat_record.agent_name,
                        record.environment,
                        record.game["kind"],
                        record.group or "",
                        record.session_id,
                        record.run_index,
                        seat,
                        repr(record.deviations[seat]),
                    ]
                )
    return path


def export_series(records: Iterable[RunRecord], path: Path | str) -> Path:
    """Per-run action series (one point per seat per run) for path plots."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["agent_name", "environment", "game", "group", "session_id", "run_index", "seat", "action"]
        )
        for record in records:
            for seat, seat_record in enumerate(record.seats):
                if seat_record.parsed_action is None:
                    continue
                writer.writerow(
                    [
                        seat_record.agent_name,
                        record.environment,
                        record.game["kind"],
                        record.group or "",
                        record.session_id,
                        record.run_index,
                        seat,
                        repr(seat_record.parsed_action),
                    ]
                )
    return path


def convergence_verdicts(
    records: Iterable[RunRecord],
    epsilon: Optional[float] = None,
    window: int = metrics.DEFAULT_WINDOW,
) -> dict[tuple[str, str], metrics.ConvergenceVerdict]:
    """Per (agent, session) verdict over the agent's mean action per run.

    Sessions shorter than window + 1 runs are skipped; epsilon defaults per
    game (absolute for the contest, asset-scaled for auctions).
    """
    from .session import spec_from_dict

    series: dict[tuple[str, str], dict[int, list[float]]] = {}
    specs: dict[str, object] = {}
    for record in records:
        specs.setdefault(record.session_id, spec_from_dict(record.game))
        for seat_record in record.seats:
            if seat_record.parsed_action is None:
                continue
            key = (seat_record.agent_name, record.session_id)
            series.setdefault(key, {}).setdefault(record.run_index, []).append(
                seat_record.parsed_action
            )
    verdicts = {}
    for key, per_run in series.items():
        points = [statistics.mean(per_run[r]) for r in sorted(per_run)]
        if len(points) < window + 1:
            continue
        eps = epsilon if epsilon is not None else metrics.default_epsilon(specs[key[1]])
        verdicts[key] = metrics.convergence_verdict(points, epsilon=eps, window=window)
    return verdicts


def read_summary(path: Path | str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def render_report(rows: Sequence[dict]) -> str:
    """Terminal table: games as rows, agents as columns, rule-break % cells."""
    if not rows:
        raise EmptyInput("no summary rows")
    agents = sorted({r["agent_name"] for r in rows})
    keys = sorted({(r["game"], r["group"], r["environment"]) for r in rows})
    cells = {
        (r["game"], r["group"], r["environment"], r["agent_name"]): r["rule_break_pct"]
        for r in rows
    }
    left_width = max(len("game / group / environment"), *(len(" / ".join(filter(None, k))) for k in keys))
    widths = [max(len(a), 6) for a in agents]
    header = "rule breaks (%)".ljust(left_width) + " | " + "  ".join(
        a.rjust(w) for a, w in zip(agents, widths)
    )
    lines = [header, "-" * len(header)]
    for key in keys:
        label = " / ".join(filter(None, key)).ljust(left_width)
        row_cells = []
        for agent, width in zip(agents, widths):
            value = cells.get((*key, agent), "")
            row_cells.append((value if value != "" else "—").rjust(width))
        lines.append(label + " | " + "  ".join(row_cells))
    return "\n".join(lines)
