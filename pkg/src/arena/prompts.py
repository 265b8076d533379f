"""Prompt rendering from text template assets.

Templates live under ``templates/<locale>/`` as plain text with
``{placeholder}`` markers and a single metadata header line naming the game
kind, variant, and response-schema keys.  Rendering is a pure function of its
inputs: equal inputs produce byte-identical bundles, which the golden-file
tests pin down.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .games import AuctionParams, BeautyContestParams, GameKind

TEMPLATE_ROOT = Path(__file__).parent / "templates"

# The numeric action key every response must carry, per game.
ACTION_KEYS = {
    GameKind.BEAUTY_CONTEST: "answer",
    GameKind.SECOND_PRICE_AUCTION: "bid",
}

_SCHEMAS: dict[tuple[GameKind, str], tuple[str, ...]] = {
    (GameKind.BEAUTY_CONTEST, "base"): ("understanding", "popular answer", "answer", "reason"),
    (GameKind.BEAUTY_CONTEST, "rational"): ("understanding", "popular answer", "answer", "reason"),
    (GameKind.BEAUTY_CONTEST, "cot"): ("popular answer", "answer"),
    (GameKind.BEAUTY_CONTEST, "history"): ("goal", "previous answer", "answer", "reason"),
    (GameKind.SECOND_PRICE_AUCTION, "base"): ("understanding", "bid", "reason"),
    (GameKind.SECOND_PRICE_AUCTION, "rational"): ("understanding", "bid", "reason"),
    (GameKind.SECOND_PRICE_AUCTION, "cot"): ("bid",),
    (GameKind.SECOND_PRICE_AUCTION, "history"): ("goal", "previous bid", "previous payoff", "bid", "reason"),
}


class PromptError(ValueError):
    pass


class MissingHistory(PromptError):
    """A follow-up turn was requested without any history entries."""


class EmptyHistory(PromptError):
    pass


class HistoryLevel(Enum):
    NONE = "none"
    PARTIAL = "partial"
    FULL = "full"


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    schema: tuple[str, ...]
    locale: str = "en"

    @property
    def action_key(self) -> str:
        return "answer" if "answer" in self.schema else "bid"


@dataclass(frozen=True)
class PlayerRound:
    """One player's record inside a history entry.

    private_value and payoff are carried only by full auction views; a None
    action marks a seat that produced no valid action that run.
    """

    action: Optional[float]
    private_value: Optional[float] = None
    payoff: Optional[float] = None


@dataclass(frozen=True)
class HistoryEntry:
    run_index: int
    players: tuple[PlayerRound, ...]


@dataclass(frozen=True)
class HistoryView:
    """A window over past runs, most recent first, trimmed to max_runs."""

    level: HistoryLevel
    max_runs: int
    entries: tuple[HistoryEntry, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.entries) > self.max_runs:
            raise PromptError(
                f"{len(self.entries)} entries exceed max_runs={self.max_runs}"
            )
        if self.level is HistoryLevel.PARTIAL:
            for entry in self.entries:
                if any(p.private_value is not None for p in entry.players):
                    raise PromptError("partial history must not carry private values")


def response_schema(kind: GameKind, variant: str) -> tuple[str, ...]:
    """The exact response keys demanded by one template variant."""
    try:
        return _SCHEMAS[(kind, variant)]
    except KeyError:
        raise PromptError(f"unknown template variant {variant!r} for {kind.value}")


def format_number(value: float) -> str:
    """Render a numeric placeholder: at most 2 decimals, no trailing zeros."""
    text = f"{value:.2f}".rstrip("0").rstrip(".")
    return text if text not in ("", "-0") else "0"


def multiplier_words(multiplier: Fraction) -> str:
    """Prose form of the target multiplier as it appears in the rules."""
    if multiplier == Fraction(2, 3):
        return "two thirds"
    return f"{multiplier.numerator}/{multiplier.denominator}"


@lru_cache(maxsize=None)
def _load_template(locale: str, name: str) -> tuple[dict[str, str], str, str]:
    path = TEMPLATE_ROOT / locale / f"{name}.txt"
    if not path.exists():
        raise PromptError(f"no template asset {name!r} for locale {locale!r}")
    raw = path.read_text(encoding="utf-8")
    header, _, body = raw.partition("\n")
    if not header.startswith("#%"):
        raise PromptError(f"{path}: missing metadata header line")
    meta = dict(
        part.split("=", 1) for part in re.findall(r"(\w+=[^=]+?)(?:\s+(?=\w+=)|$)", header[2:].strip())
    )
    m = re.match(r"\[system\]\n(.*?)\n\[user\]\n(.*)", body, re.DOTALL)
    if not m:
        raise PromptError(f"{path}: expected [system] and [user] sections")
    return meta, m.group(1).strip("\n"), m.group(2).strip("\n")


def _render(text: str, values: Mapping[str, str]) -> str:
    def sub(match: re.Match) -> str:
        key = match.group(1)
        if key not in values:
            raise PromptError(f"template placeholder {{{key}}} has no value")
        return values[key]

    return re.sub(r"\{([^{}]+)\}", sub, text)


def _bundle(
    locale: str, kind: GameKind, variant: str, values: Mapping[str, str]
) -> PromptBundle:
    name = f"{'beauty_contest' if kind is GameKind.BEAUTY_CONTEST else 'auction'}_{variant}"
    meta, system, user = _load_template(locale, name)
    schema = tuple(meta["keys"].split("|"))
    expected = response_schema(kind, variant)
    if schema != expected:
        raise PromptError(f"template {name} declares keys {schema}, expected {expected}")
    return PromptBundle(
        system=_render(system, values),
        user=_render(user, values),
        schema=schema,
        locale=locale,
    )


def _init_variant(env: str, cot: bool) -> str:
    if cot:
        return "cot"
    return "rational" if env == "rational" else "base"


def render_beauty_contest(
    params: BeautyContestParams,
    players: int,
    env: str = "melee",
    cot: bool = False,
    history: Optional[HistoryView] = None,
    player_id: int = 0,
    run_index: int = 1,
    locale: str = "en",
) -> PromptBundle:
    """Prompt for one contest seat: the rules turn, or a history follow-up."""
    if run_index > 1 and history is not None and history.level is not HistoryLevel.NONE:
        if not history.entries:
            raise MissingHistory(f"run {run_index} follow-up requested without entries")
        values = {
            "number of runs": str(run_index - 1),
            "ID of the player": str(player_id),
            "historical information": serialize_history(history),
        }
        return _bundle(locale, GameKind.BEAUTY_CONTEST, "history", values)
    values = {
        "number of players": str(players),
        "lower bound": format_number(params.lower),
        "upper bound": format_number(params.upper),
        "multiplier": multiplier_words(params.multiplier),
    }
    return _bundle(locale, GameKind.BEAUTY_CONTEST, _init_variant(env, cot), values)


def render_auction(
    params: AuctionParams,
    seat: int,
    env: str = "melee",
    cot: bool = False,
    history: Optional[HistoryView] = None,
    run_index: int = 1,
    locale: str = "en",
) -> PromptBundle:
    """Prompt for one bidder seat; private value and assets are the seat's own."""
    if not 0 <= seat < len(params.assets):
        raise PromptError(f"seat {seat} out of range")
    if run_index > 1 and history is not None and history.level is not HistoryLevel.NONE:
        if not history.entries:
            raise MissingHistory(f"run {run_index} follow-up requested without entries")
        values = {
            "number of runs": str(run_index - 1),
            "ID of the bidder": str(seat),
            "historical information": serialize_history(history),
        }
        return _bundle(locale, GameKind.SECOND_PRICE_AUCTION, "history", values)
    values = {
        "number of bidders": str(len(params.assets)),
        "private value of the bidder": format_number(params.private_values[seat]),
        "assets of the bidder": format_number(params.assets[seat]),
    }
    return _bundle(locale, GameKind.SECOND_PRICE_AUCTION, _init_variant(env, cot), values)


def serialize_history(view: HistoryView) -> str:
    """Deterministic JSON for the history block, oldest run first.

    Partial views carry each player's action only; full views add
    private_value and payoff.  Seats without a valid action serialize as
    null actions.
    """
    if not view.entries:
        raise EmptyHistory("history view has no entries")
    runs = []
    for entry in sorted(view.entries, key=lambda e: e.run_index):
        players = {}
        for pid, record in enumerate(entry.players):
            fields: dict[str, Optional[float]] = {"action": record.action}
            if record.private_value is not None:
                fields["private_value"] = record.private_value
            if record.payoff is not None:
                fields["payoff"] = record.payoff
            players[str(pid)] = fields
        runs.append({"run": entry.run_index, "players": players})
    return json.dumps(runs, sort_keys=True, indent=2)


def history_window(
    entries: Sequence[HistoryEntry], level: HistoryLevel, max_runs: int
) -> HistoryView:
    """The view for the next run: the most recent max_runs entries."""
    recent = sorted(entries, key=lambda e: e.run_index, reverse=True)[:max_runs]
    return HistoryView(level=level, max_runs=max_runs, entries=tuple(recent))
