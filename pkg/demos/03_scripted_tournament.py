"""A full scripted tournament: sessions, history threading, aggregation.

Five deterministic agents play a 6-run contest session with a 3-run history
window, then 20 one-shot sessions with a swept upper bound.  No network, no
models: everything here is reproducible from the seed.

Run with: python demos/03_scripted_tournament.py
"""

from arena import (
    AgentDescriptor,
    AgentKind,
    BeautyContestTemplate,
    Environment,
    HistoryLevel,
    HistoryPolicy,
    SessionConfig,
    run_experiment,
)
from arena.aggregate import aggregate, render_report, export_summary, read_summary
import tempfile
from pathlib import Path

roster = (
    AgentDescriptor("anchor", AgentKind.CONSTANT, value=50.0),
    AgentDescriptor("level-1", AgentKind.LEVEL_K, k=1),
    AgentDescriptor("level-2", AgentKind.LEVEL_K, k=2),
    AgentDescriptor("equilibrium", AgentKind.RATIONAL),
    AgentDescriptor("dice", AgentKind.RANDOM),
)

print("== One 6-run session with a 3-run history window ==")
config = SessionConfig(
    game=BeautyContestTemplate(players=5),
    environment=Environment.MELEE,
    roster=roster,
    seed=2024,
    runs_per_session=6,
    history=HistoryPolicy(level=HistoryLevel.PARTIAL, max_runs=3),
)
log = run_experiment(config)[0]
for record in log.runs:
    actions = [s.parsed_action for s in record.seats]
    print(
        f"run {record.run_index}: actions {[round(a, 2) for a in actions]} "
        f"-> target {record.target:.2f}, winners {record.winners}"
    )

print("\n== 20 swept sessions (group L) aggregated ==")
sweep = SessionConfig(
    game=BeautyContestTemplate(players=5),
    environment=Environment.MELEE,
    roster=roster,
    seed=7,
    sessions=20,
    group="L",
)
records = [record for session in run_experiment(sweep) for record in session.runs]
rows = aggregate(records)
with tempfile.TemporaryDirectory() as tmp:
    summary = Path(tmp) / "summary.csv"
    export_summary(rows, summary)
    print(render_report(read_summary(summary)))
print()
for row in rows:
    print(
        f"{row.agent_name:12s} mean payoff {row.mean_payoff:.3f}  "
        f"payoff ratio {row.payoff_ratio:.3f}  mean deviation {row.mean_deviation:.3f}  "
        f"win rate {row.win_rate:.2f}"
    )
