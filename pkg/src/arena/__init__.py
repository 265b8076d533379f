"""Deterministic multi-agent arena for guessing contests and second-price
auctions, with equilibrium oracles, pluggable agents, and rationality metrics.
"""

from .agents import (
    AgentDescriptor,
    AgentKind,
    ParsedResponse,
    ProviderConfig,
    act,
    chat_complete,
    level_k_action,
    parse_response,
    rational_action,
)
from .games import (
    ActionProfile,
    AuctionParams,
    BeautyContestParams,
    GameKind,
    GameSpec,
    RunResult,
    iterated_elimination,
    nash_profile,
    ne_payoffs,
    payoff_of,
    resolve,
    resolve_auction,
    resolve_beauty_contest,
    validate_action,
)
from .metrics import (
    ConvergenceVerdict,
    DeviationStats,
    MetricsSummary,
    asset_and_payoff_fractions,
    convergence_verdict,
    deviation_distance,
    deviation_stats,
    mean_deviation,
    payoff_ratio,
    rule_break_rate,
    summarize_agent,
    win_rate,
)
from .prompts import (
    HistoryLevel,
    HistoryView,
    PromptBundle,
    render_auction,
    render_beauty_contest,
    response_schema,
    serialize_history,
)
from .session import (
    AuctionTemplate,
    BeautyContestTemplate,
    Environment,
    HistoryPolicy,
    RunRecord,
    SessionConfig,
    SessionLog,
    build_roster,
    run_once,
    run_session,
    sample_group_spec,
)
from .runner import run_experiment

__version__ = "0.1.0"
