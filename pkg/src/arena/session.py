"""The host: rosters, sessions, runs, violation policy, and history threading.

A session fixes one resolved game (group sampling happens once per session so
history refers to a stable configuration) and executes its runs sequentially,
feeding each run's outcome into the next run's history window.  Seat
dispatches within a run may execute concurrently; resolution happens only
after every seat has a response, a violation, or a transport failure.

Sessions are deterministic: one master seed is split counter-style into
per-session and per-seat streams, and rosters without remote agents use a
logical clock so logs are byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import metrics
from .agents import (
    AgentDescriptor,
    AgentKind,
    MalformedProviderReply,
    MissingApiKey,
    ResponseViolation,
    ResponseViolationKind,
    RunContext,
    TransportError,
    act,
    parse_response,
)
from .games import (
    ActionProfile,
    AuctionParams,
    BeautyContestParams,
    GameKind,
    GameSpec,
    InvalidRunError,
    RunResult,
    invalid_run_result,
    resolve,
    validate_action,
    with_deviations,
)
from .prompts import (
    HistoryEntry,
    HistoryLevel,
    HistoryView,
    PlayerRound,
    PromptBundle,
    history_window,
    render_auction,
    render_beauty_contest,
)

RAW_TRUNCATE_BYTES = 8192

BC_GROUP_RANGES = {"L": (10, 100), "M": (100, 1000), "H": (1000, 10000)}
AUCTION_GROUP_PRESETS = {
    "L": (50.0, 10.0, 100.0),
    "M": (500.0, 100.0, 1000.0),
    "H": (5000.0, 1000.0, 10000.0),
}


class ConfigError(ValueError):
    pass


class RosterMismatch(ConfigError):
    pass


class Environment(Enum):
    MELEE = "melee"
    RATIONAL = "rational"
    SELF_COMPETE = "self_compete"
    SENIOR = "senior"


@dataclass(frozen=True)
class HistoryPolicy:
    level: HistoryLevel = HistoryLevel.NONE
    max_runs: int = 3

    def __post_init__(self) -> None:
        if self.max_runs < 1:
            raise ConfigError("history max_runs must be >= 1")


@dataclass(frozen=True)
class BeautyContestTemplate:
    """Declarative contest configuration; upper may be swept by a group."""

    players: int
    lower: float = 0.0
    upper: float = 100.0
    multiplier: Fraction = Fraction(2, 3)
    prize: float = 1.0


@dataclass(frozen=True)
class AuctionTemplate:
    """Declarative auction configuration.

    Private values are either fixed (explicit list) or sampled per session
    from a normal distribution; group presets override mean/std/assets.
    """

    bidders: int
    assets: float = 100.0
    value_mean: Optional[float] = None
    value_std: Optional[float] = None
    private_values: Optional[tuple[float, ...]] = None
    entrance_fee: float = 0.0

    def __post_init__(self) -> None:
        if self.private_values is not None:
            object.__setattr__(
                self, "private_values", tuple(float(v) for v in self.private_values)
            )
            if len(self.private_values) != self.bidders:
                raise ConfigError("private_values length must match bidders")
        elif self.value_mean is None or self.value_std is None:
            raise ConfigError(
                "auction template needs private_values or value_mean/value_std"
            )


GameTemplate = Union[BeautyContestTemplate, AuctionTemplate]


@dataclass(frozen=True)
class SessionConfig:
    game: GameTemplate
    environment: Environment
    roster: tuple[AgentDescriptor, ...]
    seed: int
    sessions: int = 1
    runs_per_session: int = 1
    history: HistoryPolicy = field(default_factory=HistoryPolicy)
    cot: bool = False
    group: Optional[str] = None
    run_budget_secs: float = 120.0
    truncate_raw: bool = False

    @property
    def players(self) -> int:
        if isinstance(self.game, BeautyContestTemplate):
            return self.game.players
        return self.game.bidders

    def validate(self) -> None:
        """Pre-flight checks: a config that passes never fails later for a
        reason validation could have caught."""
        if self.sessions < 1 or self.runs_per_session < 1:
            raise ConfigError("sessions and runs_per_session must be >= 1")
        if self.players < 2:
            raise ConfigError("need at least 2 players")
        if self.history.level is not HistoryLevel.NONE and self.runs_per_session < 2:
            raise ConfigError("history revelation needs runs_per_session >= 2")
        if self.cot and self.environment is not Environment.RATIONAL:
            raise ConfigError("chain-of-thought prompts pair with the rational environment")
        if self.group is not None and self.group not in BC_GROUP_RANGES:
            raise ConfigError(f"unknown group {self.group!r}, expected L/M/H")
        build_roster(self)
        # Exercise one sampling pass so malformed templates surface up front.
        sample_group_spec(self.game, self.group, np.random.default_rng(0))


def _rational(name: str) -> AgentDescriptor:
    return AgentDescriptor(name=name, kind=AgentKind.RATIONAL)


def build_roster(config: SessionConfig) -> tuple[AgentDescriptor, ...]:
    """Seat assignment per environment; seat order is stable across runs."""
    env = config.environment
    roster = config.roster
    n = config.players
    if env is Environment.RATIONAL:
        if n != 5:
            raise RosterMismatch("rational environment plays 5 seats: 1 subject + 4 rational")
        if len(roster) == 1:
            if roster[0].kind is AgentKind.RATIONAL:
                raise RosterMismatch("rational environment needs a non-rational subject")
            return (roster[0],) + tuple(_rational(f"rational-{i}") for i in range(1, 5))
        if (
            len(roster) == 5
            and roster[0].kind is not AgentKind.RATIONAL
            and all(a.kind is AgentKind.RATIONAL for a in roster[1:])
        ):
            return roster
        raise RosterMismatch(
            "rational environment takes one subject plus 4 hard-coded rational agents"
        )
    if env is Environment.SELF_COMPETE:
        if len(roster) == 1:
            return roster * n
        if len(roster) == n and len({id(a) for a in roster}) >= 1 and len(set(roster)) == 1:
            return roster
        raise RosterMismatch("self-compete seats all share one descriptor")
    if len(roster) != n:
        raise RosterMismatch(f"roster has {len(roster)} seats, game needs {n}")
    return roster


def sample_group_spec(
    template: GameTemplate, group: Optional[str], rng: np.random.Generator
) -> GameSpec:
    """Resolve a template into a concrete GameSpec, drawing swept values.

    Contest sweeps draw an integer upper bound uniformly from the group's
    half-open range.  Auction sweeps draw per-seat private values from the
    group's normal, rounded to 2 decimals and resampled into (0, A]; without
    a group a fully concrete template passes through unchanged.
    """
    if isinstance(template, BeautyContestTemplate):
        upper = template.upper
        if group is not None:
            lo, hi = BC_GROUP_RANGES[group]
            upper = float(rng.integers(lo, hi))
        return GameSpec(
            GameKind.BEAUTY_CONTEST,
            template.players,
            bc=BeautyContestParams(
                lower=template.lower,
                upper=upper,
                multiplier=template.multiplier,
                prize=template.prize,
            ),
        )
    assets = template.assets
    mean, std = template.value_mean, template.value_std
    if group is not None:
        mean, std, assets = AUCTION_GROUP_PRESETS[group]
    if template.private_values is not None and group is None:
        values = template.private_values
    else:
        values = tuple(_draw_value(rng, mean, std, assets) for _ in range(template.bidders))
    return GameSpec(
        GameKind.SECOND_PRICE_AUCTION,
        template.bidders,
        auction=AuctionParams(
            assets=(assets,) * template.bidders,
            private_values=values,
            entrance_fee=template.entrance_fee,
        ),
    )


def _draw_value(rng: np.random.Generator, mean: float, std: float, assets: float) -> float:
    draw = 0.0
    for _ in range(100):
        draw = round(float(rng.normal(mean, std)), 2)
        if 0 < draw <= assets:
            return draw
    return min(max(draw, 0.01), assets)


@dataclass
class SeatRecord:
    agent_name: str
    raw_response: Optional[str]
    parsed_action: Optional[float]
    violation: Optional[dict]
    transport_error: Optional[str] = None


@dataclass
class RunRecord:
    """One run, self-contained: metrics are recomputable from this alone."""

    session_id: str
    run_index: int
    environment: str
    group: Optional[str]
    history_level: str
    game: dict
    seats: list[SeatRecord]
    target: Optional[float]
    winners: list[int]
    price_paid: Optional[float]
    payoffs: list[Optional[float]]
    ne_actions: list[float]
    ne_payoffs: list[float]
    deviations: list[Optional[float]]
    valid: bool
    rounds: int
    profitable_win: Optional[bool]
    started_at: str
    finished_at: str

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        seats = [SeatRecord(**s) for s in data["seats"]]
        return cls(**{**data, "seats": seats})


@dataclass
class SessionLog:
    config_digest: str
    session_id: str
    game: dict
    runs: list[RunRecord]
    agent_summaries: dict


def spec_to_dict(spec: GameSpec) -> dict:
    if spec.kind is GameKind.BEAUTY_CONTEST:
        bc = spec.bc
        return {
            "kind": spec.kind.value,
            "players": spec.players,
            "lower": bc.lower,
            "upper": bc.upper,
            "multiplier": [bc.multiplier.numerator, bc.multiplier.denominator],
            "prize": bc.prize,
        }
    auc = spec.auction
    return {
        "kind": spec.kind.value,
        "players": spec.players,
        "assets": list(auc.assets),
        "private_values": list(auc.private_values),
        "entrance_fee": auc.entrance_fee,
    }


def spec_from_dict(data: dict) -> GameSpec:
    if data["kind"] == GameKind.BEAUTY_CONTEST.value:
        num, den = data["multiplier"]
        return GameSpec(
            GameKind.BEAUTY_CONTEST,
            data["players"],
            bc=BeautyContestParams(
                lower=data["lower"],
                upper=data["upper"],
                multiplier=Fraction(num, den),
                prize=data["prize"],
            ),
        )
    return GameSpec(
        GameKind.SECOND_PRICE_AUCTION,
        data["players"],
        auction=AuctionParams(
            assets=tuple(data["assets"]),
            private_values=tuple(data["private_values"]),
            entrance_fee=data["entrance_fee"],
        ),
    )


def _descriptor_dict(agent: AgentDescriptor) -> dict:
    data: dict = {"name": agent.name, "kind": agent.kind.value}
    if agent.provider is not None:
        # Only the env-var *name* is recorded; the credential never is.
        data["provider"] = asdict(agent.provider)
    if agent.k is not None:
        data["k"] = agent.k
    if agent.value is not None:
        data["value"] = agent.value
    if agent.script is not None:
        data["script"] = list(agent.script)
    return data


def config_to_dict(config: SessionConfig) -> dict:
    game: dict = asdict(config.game)
    if isinstance(config.game, BeautyContestTemplate):
        game["multiplier"] = [
            config.game.multiplier.numerator,
            config.game.multiplier.denominator,
        ]
        game["game_kind"] = "beauty_contest"
    else:
        game["game_kind"] = "auction"
    return {
        "game": game,
        "environment": config.environment.value,
        "roster": [_descriptor_dict(a) for a in config.roster],
        "seed": config.seed,
        "sessions": config.sessions,
        "runs_per_session": config.runs_per_session,
        "history": {"level": config.history.level.value, "max_runs": config.history.max_runs},
        "cot": config.cot,
        "group": config.group,
        "run_budget_secs": config.run_budget_secs,
        "truncate_raw": config.truncate_raw,
    }


def config_digest(config: SessionConfig) -> str:
    """Stable hash of the resolved config; any value change changes it."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _wall_clock() -> str:
    return datetime.now(timezone.utc).isoformat()


def _logical_clock() -> Callable[[], str]:
    counter = iter(range(10**9))

    def tick() -> str:
        return datetime.fromtimestamp(next(counter), tz=timezone.utc).isoformat()

    return tick


PromptHook = Callable[[int, int, int, int, PromptBundle], None]


def _render_seat_prompt(
    spec: GameSpec,
    env: Environment,
    cot: bool,
    view: Optional[HistoryView],
    seat: int,
    run_index: int,
) -> PromptBundle:
    if spec.kind is GameKind.BEAUTY_CONTEST:
        return render_beauty_contest(
            spec.bc,
            spec.players,
            env=env.value,
            cot=cot,
            history=view,
            player_id=seat,
            run_index=run_index,
        )
    return render_auction(
        spec.auction, seat, env=env.value, cot=cot, history=view, run_index=run_index
    )


def _seat_response(
    agent: AgentDescriptor,
    bundle: PromptBundle,
    ctx: RunContext,
    truncate: bool,
) -> SeatRecord:
    try:
        raw = act(agent, bundle, ctx)
    except (TransportError, MissingApiKey, MalformedProviderReply) as exc:
        return SeatRecord(agent.name, None, None, None, f"{type(exc).__name__}: {exc}")
    stored = raw[:RAW_TRUNCATE_BYTES] if truncate else raw
    parsed = parse_response(raw, bundle.schema)
    if parsed.violation is not None:
        return SeatRecord(
            agent.name,
            stored,
            None,
            {"kind": parsed.violation.kind.value, "detail": parsed.violation.detail},
        )
    check = validate_action(ctx.spec, ctx.seat, parsed.action)
    if not check.ok:
        rule = ResponseViolation(
            ResponseViolationKind.RULE_VIOLATION, f"{check.reason.value}: {check.detail}"
        )
        return SeatRecord(
            agent.name, stored, None, {"kind": rule.kind.value, "detail": rule.detail}
        )
    return SeatRecord(agent.name, stored, parsed.action, None)


def run_once(
    spec: GameSpec,
    roster: Sequence[AgentDescriptor],
    *,
    environment: Environment = Environment.MELEE,
    cot: bool = False,
    history_view: Optional[HistoryView] = None,
    run_index: int = 1,
    session_id: str = "adhoc",
    session_index: int = 0,
    group: Optional[str] = None,
    history_level: HistoryLevel = HistoryLevel.NONE,
    seat_rngs: Optional[Sequence[np.random.Generator]] = None,
    prev_actions: Optional[Sequence[Optional[float]]] = None,
    prev_payoffs: Optional[Sequence[Optional[float]]] = None,
    budget_secs: float = 120.0,
    truncate_raw: bool = False,
    clock: Optional[Callable[[], str]] = None,
    on_prompt: Optional[PromptHook] = None,
) -> RunRecord:
    """Execute one run: render, dispatch, barrier, parse, validate, resolve."""
    if len(roster) != spec.players:
        raise RosterMismatch(f"roster {len(roster)} vs {spec.players} seats")
    clock = clock or _wall_clock
    started = clock()
    n = spec.players
    bundles = [
        _render_seat_prompt(spec, environment, cot, history_view, seat, run_index)
        for seat in range(n)
    ]
    if on_prompt is not None:
        for seat, bundle in enumerate(bundles):
            on_prompt(session_index, run_index, seat, n, bundle)
    contexts = [
        RunContext(
            spec,
            seat,
            run_index=run_index,
            rng=seat_rngs[seat] if seat_rngs is not None else None,
            prev_action=prev_actions[seat] if prev_actions is not None else None,
            prev_payoff=prev_payoffs[seat] if prev_payoffs is not None else None,
        )
        for seat in range(n)
    ]
    if any(a.kind is AgentKind.LLM for a in roster):
        seats = _dispatch_concurrent(roster, bundles, contexts, truncate_raw, budget_secs)
    else:
        seats = [
            _seat_response(roster[s], bundles[s], contexts[s], truncate_raw)
            for s in range(n)
        ]
    record = _resolve_run(spec, seats)
    return RunRecord(
        session_id=session_id,
        run_index=run_index,
        environment=environment.value,
        group=group,
        history_level=history_level.value,
        game=spec_to_dict(spec),
        seats=seats,
        started_at=started,
        finished_at=clock(),
        **record,
    )


def _dispatch_concurrent(roster, bundles, contexts, truncate_raw, budget_secs):
    n = len(roster)
    seats: list[Optional[SeatRecord]] = [None] * n
    with ThreadPoolExecutor(max_workers=n) as pool:
        futures = {
            pool.submit(_seat_response, roster[s], bundles[s], contexts[s], truncate_raw): s
            for s in range(n)
        }
        done, pending = wait(futures, timeout=budget_secs)
        for future in done:
            seats[futures[future]] = future.result()
        for future in pending:
            future.cancel()
            seats[futures[future]] = SeatRecord(
                roster[futures[future]].name,
                None,
                None,
                None,
                "Timeout: run wall-clock budget exceeded",
            )
    return seats


def _resolve_run(spec: GameSpec, seats: Sequence[SeatRecord]) -> dict:
    profile = ActionProfile(tuple(s.parsed_action for s in seats))
    try:
        result = resolve(spec, profile)
    except InvalidRunError:
        result = invalid_run_result(spec)
    payoffs = list(result.payoffs)
    if result.valid and spec.kind is GameKind.SECOND_PRICE_AUCTION:
        fee = spec.auction.entrance_fee
        for i, seat in enumerate(seats):
            if seat.violation is not None:
                payoffs[i] = spec.auction.assets[i] - fee
    deviations: list[Optional[float]] = [None] * spec.players
    if result.valid:
        for i, action in enumerate(profile.actions):
            if action is not None:
                deviations[i] = metrics.deviation_distance(spec, i, action, profile)
    profitable: Optional[bool] = None
    if result.valid and spec.kind is GameKind.SECOND_PRICE_AUCTION:
        winner = result.winners[0]
        profitable = payoffs[winner] > spec.auction.assets[winner]
    return {
        "target": result.target,
        "winners": list(result.winners),
        "price_paid": result.price_paid,
        "payoffs": payoffs,
        "ne_actions": list(result.ne_actions),
        "ne_payoffs": list(result.ne_payoffs),
        "deviations": deviations,
        "valid": result.valid,
        "rounds": result.rounds,
        "profitable_win": profitable,
    }


def _entry_from_record(
    spec: GameSpec, record: RunRecord, level: HistoryLevel
) -> HistoryEntry:
    full_auction = (
        level is HistoryLevel.FULL and spec.kind is GameKind.SECOND_PRICE_AUCTION
    )
    players = []
    for i, seat in enumerate(record.seats):
        if full_auction:
            players.append(
                PlayerRound(
                    action=seat.parsed_action,
                    private_value=spec.auction.private_values[i],
                    payoff=record.payoffs[i],
                )
            )
        else:
            players.append(PlayerRound(action=seat.parsed_action))
    return HistoryEntry(run_index=record.run_index, players=tuple(players))


def run_session(
    config: SessionConfig,
    session_index: int = 0,
    clock: Optional[Callable[[], str]] = None,
    on_prompt: Optional[PromptHook] = None,
) -> SessionLog:
    """Execute one session: resolve the game once, then run all its runs."""
    config.validate()
    roster = build_roster(config)
    digest = config_digest(config)
    session_id = f"{digest[:12]}-{session_index:04d}"
    spec_rng = np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(session_index,))
    )
    spec = sample_group_spec(config.game, config.group, spec_rng)
    if clock is None:
        deterministic = all(a.kind is not AgentKind.LLM for a in roster)
        clock = _logical_clock() if deterministic else _wall_clock
    level = config.history.level
    entries: list[HistoryEntry] = []
    prev_actions: list[Optional[float]] = [None] * spec.players
    prev_payoffs: list[Optional[float]] = [None] * spec.players
    runs: list[RunRecord] = []
    for run_index in range(1, config.runs_per_session + 1):
        view = None
        if level is not HistoryLevel.NONE and run_index > 1:
            view = history_window(entries, level, config.history.max_runs)
        seat_rngs = [
            np.random.default_rng(
                np.random.SeedSequence(config.seed, spawn_key=(session_index, run_index, s))
            )
            for s in range(spec.players)
        ]
        record = run_once(
            spec,
            roster,
            environment=config.environment,
            cot=config.cot,
            history_view=view,
            run_index=run_index,
            session_id=session_id,
            session_index=session_index,
            group=config.group,
            history_level=level,
            seat_rngs=seat_rngs,
            prev_actions=prev_actions,
            prev_payoffs=prev_payoffs,
            budget_secs=config.run_budget_secs,
            truncate_raw=config.truncate_raw,
            clock=clock,
            on_prompt=on_prompt,
        )
        runs.append(record)
        entries.append(_entry_from_record(spec, record, level))
        prev_actions = [s.parsed_action for s in record.seats]
        prev_payoffs = list(record.payoffs)
    return SessionLog(
        config_digest=digest,
        session_id=session_id,
        game=spec_to_dict(spec),
        runs=runs,
        agent_summaries=_summarize(roster, runs),
    )


def _summarize(roster: Sequence[AgentDescriptor], runs: Sequence[RunRecord]) -> dict:
    summary: dict[str, dict] = {}
    for seat, agent in enumerate(roster):
        cells = len(runs)
        violations = sum(1 for r in runs if r.seats[seat].violation is not None)
        failures = sum(1 for r in runs if r.seats[seat].transport_error is not None)
        wins = sum(
            1
            for r in runs
            if r.valid and seat in r.winners and r.seats[seat].parsed_action is not None
        )
        entry = summary.setdefault(
            agent.name, {"runs": 0, "violations": 0, "transport_failures": 0, "wins": 0}
        )
        entry["runs"] += cells
        entry["violations"] += violations
        entry["transport_failures"] += failures
        entry["wins"] += wins
    return summary
