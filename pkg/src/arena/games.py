"""Deterministic resolution of the two arena games.

Both games have a unique pure-strategy equilibrium: everyone plays the lower
bound in the guessing contest, everyone bids their private value in the
second-price auction.  Resolution is exact where exactness matters: the
contest target is computed in rational arithmetic so that tie detection does
not depend on float summation order.

All functions here are pure; every value is immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

# Absolute tolerance for "closest to the target" ties, kept as an exact
# rational so comparisons are reproducible.
TIE_TOLERANCE = Fraction(1, 10**9)


class GameConfigError(ValueError):
    """A game parameterization violates its invariants."""


class InvalidRunError(ValueError):
    """Fewer than two present actions: the run cannot be resolved."""


class GameKind(Enum):
    BEAUTY_CONTEST = "beauty_contest"
    SECOND_PRICE_AUCTION = "second_price_auction"


class ViolationKind(Enum):
    """Typed reasons an action can break the rules of a game."""

    OUT_OF_RANGE = "out_of_range"
    OVER_ASSETS = "over_assets"
    NON_FINITE = "non_finite"


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    reason: Optional[ViolationKind] = None
    detail: str = ""


@dataclass(frozen=True)
class BeautyContestParams:
    """Choose a number in [lower, upper]; closest to multiplier * mean wins.

    The multiplier is stored as an exact integer ratio (0 < p < 1) so the
    target can be formed without rounding.  The prize is split among tied
    winners.
    """

    lower: float = 0.0
    upper: float = 100.0
    multiplier: Fraction = Fraction(2, 3)
    prize: float = 1.0

    def __post_init__(self) -> None:
        if not (0 <= self.lower < self.upper):
            raise GameConfigError(
                f"need 0 <= lower < upper, got [{self.lower}, {self.upper}]"
            )
        p = self.multiplier
        if not isinstance(p, Fraction):
            raise GameConfigError("multiplier must be an exact Fraction")
        if not (0 < p < 1):
            raise GameConfigError(f"multiplier must satisfy 0 < p < 1, got {p}")
        if not self.prize > 0:
            raise GameConfigError(f"prize must be positive, got {self.prize}")


@dataclass(frozen=True)
class AuctionParams:
    """One sealed-bid second-price auction: per-seat assets and private values.

    0 < v_i <= A_i guarantees the equilibrium bid is always affordable.  The
    entrance fee is the asset deduction applied by the host to a rule-breaking
    bidder; it plays no role in resolution itself.
    """

    assets: tuple[float, ...]
    private_values: tuple[float, ...]
    entrance_fee: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "assets", tuple(float(a) for a in self.assets))
        object.__setattr__(
            self, "private_values", tuple(float(v) for v in self.private_values)
        )
        if len(self.assets) != len(self.private_values):
            raise GameConfigError("assets and private_values must have equal length")
        for i, (a, v) in enumerate(zip(self.assets, self.private_values)):
            if not a > 0:
                raise GameConfigError(f"seat {i}: assets must be positive, got {a}")
            if not 0 < v <= a:
                raise GameConfigError(
                    f"seat {i}: need 0 < private value <= assets, got v={v}, A={a}"
                )
        if self.entrance_fee < 0:
            raise GameConfigError("entrance fee must be >= 0")


@dataclass(frozen=True)
class GameSpec:
    """Full parameterization of one game instance."""

    kind: GameKind
    players: int
    bc: Optional[BeautyContestParams] = None
    auction: Optional[AuctionParams] = None

    def __post_init__(self) -> None:
        if self.players < 2:
            raise GameConfigError(f"need at least 2 players, got {self.players}")
        if self.kind is GameKind.BEAUTY_CONTEST:
            if self.bc is None or self.auction is not None:
                raise GameConfigError("beauty contest spec must carry exactly bc params")
        else:
            if self.auction is None or self.bc is not None:
                raise GameConfigError("auction spec must carry exactly auction params")
            if len(self.auction.assets) != self.players:
                raise GameConfigError(
                    f"auction params sized for {len(self.auction.assets)} seats, "
                    f"spec has {self.players}"
                )


@dataclass(frozen=True)
class ActionProfile:
    """Per-seat actions; None marks a violated or otherwise excluded seat."""

    actions: tuple[Optional[float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "actions",
            tuple(None if a is None else float(a) for a in self.actions),
        )
        for i, a in enumerate(self.actions):
            if a is not None and not math.isfinite(a):
                raise GameConfigError(f"seat {i}: present action must be finite")

    @property
    def present(self) -> list[tuple[int, float]]:
        return [(i, a) for i, a in enumerate(self.actions) if a is not None]


@dataclass(frozen=True)
class RunResult:
    """Resolved outcome of one run.

    ``payoffs`` are concrete for every seat of a valid run (absent contest
    seats get 0, absent auction seats keep their assets); on an invalid run
    every per-seat outcome is None and ``winners`` is empty.  ``deviations``
    are attached by the session driver, not by resolution.
    """

    target: Optional[float]
    winners: tuple[int, ...]
    price_paid: Optional[float]
    payoffs: tuple[Optional[float], ...]
    ne_actions: tuple[float, ...]
    ne_payoffs: tuple[float, ...]
    deviations: tuple[Optional[float], ...]
    valid: bool
    rounds: int = 1


def validate_action(spec: GameSpec, seat: int, action: float) -> ValidationResult:
    """Check one action against the game rules.  Violations are values."""
    if not 0 <= seat < spec.players:
        raise GameConfigError(f"seat {seat} out of range for {spec.players} players")
    if not math.isfinite(action):
        return ValidationResult(False, ViolationKind.NON_FINITE, f"action {action!r}")
    if spec.kind is GameKind.BEAUTY_CONTEST:
        bc = spec.bc
        if not bc.lower <= action <= bc.upper:
            return ValidationResult(
                False,
                ViolationKind.OUT_OF_RANGE,
                f"{action} outside [{bc.lower}, {bc.upper}]",
            )
        return ValidationResult(True)
    assets = spec.auction.assets[seat]
    if action < 0:
        return ValidationResult(
            False, ViolationKind.OUT_OF_RANGE, f"negative bid {action}"
        )
    if action > assets:
        return ValidationResult(
            False, ViolationKind.OVER_ASSETS, f"bid {action} over assets {assets}"
        )
    return ValidationResult(True)


def _contest_target(params: BeautyContestParams, present: Sequence[tuple[int, float]]) -> Fraction:
    # Fraction(float) is exact, so the target is formed before any rounding.
    total = sum((Fraction(a) for _, a in present), Fraction(0))
    return params.multiplier * total / len(present)


def resolve_beauty_contest(
    params: BeautyContestParams, profile: ActionProfile
) -> RunResult:
    """Resolve one guessing-contest run.

    The target is multiplier * mean of the present actions; every seat within
    the tie tolerance of the minimal distance wins an equal share of the
    prize.  Absent seats are excluded from the mean and receive 0.
    """
    present = profile.present
    if len(present) < 2:
        raise InvalidRunError(f"{len(present)} present actions, need >= 2")
    n = len(profile.actions)
    target = _contest_target(params, present)
    distances = {i: abs(Fraction(a) - target) for i, a in present}
    best = min(distances.values())
    winners = tuple(i for i, d in sorted(distances.items()) if d - best <= TIE_TOLERANCE)
    share = params.prize / len(winners)
    payoffs = tuple(
        (share if i in winners else 0.0) if profile.actions[i] is not None else 0.0
        for i in range(n)
    )
    return RunResult(
        target=float(target),
        winners=winners,
        price_paid=None,
        payoffs=payoffs,
        ne_actions=(params.lower,) * n,
        ne_payoffs=(params.prize / n,) * n,
        deviations=(None,) * n,
        valid=True,
    )


def resolve_auction(params: AuctionParams, profile: ActionProfile) -> RunResult:
    """Resolve one sealed-bid second-price auction run.

    The lowest-index seat among the highest bidders takes the item and pays
    the highest remaining bid.  Payoffs are final assets: A - price + v for
    the winner, A for everyone else (absent seats included; penalties are
    host policy, not resolution).
    """
    present = profile.present
    if len(present) < 2:
        raise InvalidRunError(f"{len(present)} present bids, need >= 2")
    if len(profile.actions) != len(params.assets):
        raise GameConfigError("profile size does not match auction params")
    n = len(profile.actions)
    top = max(b for _, b in present)
    winner = min(i for i, b in present if b == top)
    price = max(b for i, b in present if i != winner)
    payoffs = tuple(
        params.assets[i] - price + params.private_values[i] if i == winner
        else params.assets[i]
        for i in range(n)
    )
    ne = nash_profile(
        GameSpec(GameKind.SECOND_PRICE_AUCTION, n, auction=params)
    )
    return RunResult(
        target=None,
        winners=(winner,),
        price_paid=price,
        payoffs=payoffs,
        ne_actions=ne,
        ne_payoffs=_auction_ne_payoffs(params),
        deviations=(None,) * n,
        valid=True,
    )


def invalid_run_result(spec: GameSpec) -> RunResult:
    """The RunResult recorded when fewer than two seats produced an action."""
    n = spec.players
    return RunResult(
        target=None,
        winners=(),
        price_paid=None,
        payoffs=(None,) * n,
        ne_actions=nash_profile(spec),
        ne_payoffs=ne_payoffs(spec),
        deviations=(None,) * n,
        valid=False,
    )


def nash_profile(spec: GameSpec) -> tuple[float, ...]:
    """The unique pure equilibrium actions, per seat."""
    if spec.kind is GameKind.BEAUTY_CONTEST:
        return (spec.bc.lower,) * spec.players
    return spec.auction.private_values


def _auction_ne_payoffs(params: AuctionParams) -> tuple[float, ...]:
    n = len(params.assets)
    profile = ActionProfile(params.private_values)
    top = max(params.private_values)
    winner = min(i for i, v in enumerate(params.private_values) if v == top)
    price = max(v for i, v in enumerate(params.private_values) if i != winner)
    return tuple(
        params.assets[i] - price + params.private_values[i] if i == winner
        else params.assets[i]
        for i in range(n)
    )


def ne_payoffs(spec: GameSpec) -> tuple[float, ...]:
    """Per-seat payoffs when everyone plays the equilibrium profile."""
    if spec.kind is GameKind.BEAUTY_CONTEST:
        return (spec.bc.prize / spec.players,) * spec.players
    return _auction_ne_payoffs(spec.auction)


def payoff_of(spec: GameSpec, profile: ActionProfile, seat: int) -> float:
    """One seat's payoff under full resolution; the oracle for deviation and
    dominance checks."""
    if spec.kind is GameKind.BEAUTY_CONTEST:
        result = resolve_beauty_contest(spec.bc, profile)
    else:
        result = resolve_auction(spec.auction, profile)
    return result.payoffs[seat]


def resolve(spec: GameSpec, profile: ActionProfile) -> RunResult:
    """Dispatch resolution on the game kind."""
    if spec.kind is GameKind.BEAUTY_CONTEST:
        return resolve_beauty_contest(spec.bc, profile)
    return resolve_auction(spec.auction, profile)


def with_deviations(result: RunResult, deviations: Sequence[Optional[float]]) -> RunResult:
    return replace(result, deviations=tuple(deviations))


def iterated_elimination(
    params: BeautyContestParams, grid_step: float
) -> tuple[float, ...]:
    """Survivors of iterated elimination on the discretized action grid.

    Each round drops every strategy above the highest attainable target,
    multiplier * max(survivors): such a point is farther from any realizable
    target than the surviving points at or below it.  When every survivor
    sits above the attainable target range, only the smallest remains.  With
    lower = 0 this contracts to exactly {0}.
    """
    if not grid_step > 0:
        raise GameConfigError(f"grid_step must be positive, got {grid_step}")
    lower = Fraction(params.lower)
    upper = Fraction(params.upper)
    step = Fraction(grid_step)
    count = int((upper - lower) / step)
    survivors = [lower + k * step for k in range(count + 1)]
    while True:
        t_max = params.multiplier * max(survivors)
        kept = [a for a in survivors if a <= t_max] or [min(survivors)]
        if kept == survivors:
            return tuple(float(a) for a in survivors)
        survivors = kept
