"""Rationality and strategic-reasoning metrics over logged runs.

All aggregation is pure counting/averaging over immutable inputs, so results
are invariant to run reordering and safe to recompute from raw logs.  Means
are taken with exact rational accumulation (statistics.mean) so statements
like "ratio is exactly 1.0 at equilibrium" hold without float-order caveats.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .games import ActionProfile, GameKind, GameSpec, payoff_of

# Absolute step tolerance used by convergence checks on contest series; for
# auctions the session layer scales this with the asset level (0.01 * A).
CONTEST_EPSILON = 1e-6
AUCTION_EPSILON_FRACTION = 0.01
DEFAULT_WINDOW = 2


class MetricsError(ValueError):
    pass


class EmptyInput(MetricsError):
    pass


class ZeroOptimal(MetricsError):
    pass


class ZeroNEPayoff(MetricsError):
    pass


class SeriesTooShort(MetricsError):
    pass


class NonpositiveDenominator(MetricsError):
    pass


@dataclass(frozen=True)
class DeviationStats:
    """Per-run equilibrium deviations for one roster, plus their grand mean."""

    per_run: tuple[float, ...]
    mean: float


@dataclass(frozen=True)
class ConvergenceVerdict:
    series: tuple[float, ...]
    converged: bool
    settled_at: Optional[int]
    epsilon: float
    window: int


@dataclass(frozen=True)
class MetricsSummary:
    """Per-agent aggregates over a set of logged runs.

    Payoff fields are None for an agent whose every run was a violation
    (completed = False); such agents keep a rule-break rate but are dropped
    from payoff and deviation reporting.
    """

    agent_name: str
    mean_payoff: Optional[float]
    payoff_ratio: Optional[float]
    mean_deviation: Optional[float]
    rule_break_pct: float
    win_rate: Optional[float]
    completed: bool
    convergence: Optional[ConvergenceVerdict] = None


def payoff_ratio(payoffs: Sequence[float], optimal: float) -> float:
    """Mean realized payoff divided by the optimal (equilibrium) payoff."""
    if len(payoffs) == 0:
        raise EmptyInput("no payoffs")
    if optimal == 0:
        raise ZeroOptimal("optimal payoff is zero")
    return statistics.mean(payoffs) / optimal


def deviation_distance(
    spec: GameSpec, seat: int, action: float, profile_context: ActionProfile
) -> float:
    """Distance of one action from the equilibrium outcome.

    Auction: |pi(a)/pi(a*) - 1| where pi is the seat's final asset against
    the realized opponent bids, re-resolved with only this seat's bid
    replaced.  Contest: the range-normalized action gap |a - a*| / (upper -
    lower), which is 0 at equilibrium and bounded by 1.
    """
    if spec.kind is GameKind.BEAUTY_CONTEST:
        bc = spec.bc
        return abs(action - bc.lower) / (bc.upper - bc.lower)
    ne_bid = spec.auction.private_values[seat]
    actual = _substitute(profile_context, seat, action)
    at_ne = _substitute(profile_context, seat, ne_bid)
    realized = payoff_of(spec, actual, seat)
    optimal = payoff_of(spec, at_ne, seat)
    if optimal == 0:
        # Unreachable while 0 < v <= A holds; guarded for malformed logs.
        raise ZeroNEPayoff(f"seat {seat} has zero equilibrium payoff")
    return abs(realized / optimal - 1.0)


def _substitute(profile: ActionProfile, seat: int, action: float) -> ActionProfile:
    actions = list(profile.actions)
    actions[seat] = action
    return ActionProfile(tuple(actions))


def mean_deviation(per_agent_per_run: Iterable[Iterable[Optional[float]]]) -> float:
    """Grand mean of deviations over all included (non-None) cells."""
    cells = [d for row in per_agent_per_run for d in row if d is not None]
    if not cells:
        raise EmptyInput("no included deviation cells")
    return statistics.mean(cells)


def rule_break_rate(violated: Sequence[bool]) -> float:
    """Percentage of runs carrying a violation flag for one agent."""
    if len(violated) == 0:
        raise EmptyInput("no runs")
    return 100.0 * sum(violated) / len(violated)


def win_rate(wins: Sequence[bool]) -> float:
    """Fraction of valid runs in which the agent is in the winner set."""
    if len(wins) == 0:
        raise EmptyInput("no valid runs")
    return sum(wins) / len(wins)


def default_epsilon(spec: GameSpec) -> float:
    """Step tolerance for convergence checks: absolute for the contest,
    scaled to the asset level for auctions."""
    if spec.kind is GameKind.BEAUTY_CONTEST:
        return CONTEST_EPSILON
    return AUCTION_EPSILON_FRACTION * max(spec.auction.assets)


def convergence_verdict(
    series: Sequence[float], epsilon: float = CONTEST_EPSILON, window: int = DEFAULT_WINDOW
) -> ConvergenceVerdict:
    """Whether a per-run action series settles to within epsilon per step.

    Converged means the final `window` consecutive steps all move by at most
    epsilon; settled_at is the first index after which every step stays
    within epsilon to the end of the series.
    """
    if len(series) < window + 1:
        raise SeriesTooShort(f"need at least {window + 1} points, got {len(series)}")
    diffs = [abs(b - a) for a, b in zip(series, series[1:])]
    converged = all(d <= epsilon for d in diffs[-window:])
    settled_at: Optional[int] = None
    if converged:
        settled_at = 0
        for t in range(len(diffs) - 1, -1, -1):
            if diffs[t] > epsilon:
                settled_at = t + 1
                break
    return ConvergenceVerdict(
        series=tuple(float(a) for a in series),
        converged=converged,
        settled_at=settled_at,
        epsilon=epsilon,
        window=window,
    )


def asset_and_payoff_fractions(
    initial_assets: float, final_asset: float, ne_asset: float
) -> tuple[float, float]:
    """Final asset over initial assets, and over the equilibrium asset."""
    if initial_assets <= 0 or ne_asset <= 0:
        raise NonpositiveDenominator(
            f"initial={initial_assets}, ne={ne_asset} must both be positive"
        )
    return final_asset / initial_assets, final_asset / ne_asset


def deviation_stats(per_run: Sequence[float]) -> DeviationStats:
    """Bundle per-run deviations with their mean, keeping the samples for
    distribution plots."""
    samples = tuple(float(d) for d in per_run)
    return DeviationStats(per_run=samples, mean=mean_deviation([samples]))


def summarize_agent(
    agent_name: str,
    *,
    payoffs: Sequence[float],
    optimal: float,
    deviations: Sequence[float],
    violated: Sequence[bool],
    wins: Sequence[bool],
    convergence: Optional[ConvergenceVerdict] = None,
) -> MetricsSummary:
    """All per-agent metrics in one pass over an agent's included cells.

    `violated` covers every run the agent answered (or failed to answer
    legally); the payoff/deviation/win inputs cover only valid, non-violating
    cells and may be empty, in which case the agent never completed a run.
    An agent with no attempts at all (every run lost to transport) did not
    complete anything but also broke no rules.
    """
    completed = bool(violated) and not all(violated)
    return MetricsSummary(
        agent_name=agent_name,
        mean_payoff=statistics.mean(payoffs) if payoffs else None,
        payoff_ratio=payoff_ratio(payoffs, optimal) if payoffs else None,
        mean_deviation=deviation_stats(deviations).mean if deviations else None,
        rule_break_pct=rule_break_rate(violated) if violated else 0.0,
        win_rate=win_rate(wins) if wins else None,
        completed=completed,
        convergence=convergence,
    )
