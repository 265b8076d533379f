"""How the per-agent metrics are computed from raw actions.

Run with: python demos/02_metrics_walkthrough.py
"""

from arena import (
    ActionProfile,
    AuctionParams,
    GameKind,
    GameSpec,
    asset_and_payoff_fractions,
    convergence_verdict,
    deviation_distance,
    mean_deviation,
    payoff_ratio,
    rule_break_rate,
    win_rate,
)

spec = GameSpec(
    GameKind.SECOND_PRICE_AUCTION,
    3,
    auction=AuctionParams((100.0,) * 3, (60.0, 50.0, 40.0)),
)

print("== Deviation distance (auction) ==")
profile = ActionProfile((60.0, 65.0, 40.0))
d = deviation_distance(spec, 1, 65.0, profile)
print("seat 1 (value 50) bids 65 against 60/40:")
print(f"  realized final asset 90 vs 100 at the truthful bid -> deviation {d:.3f}")

print("\n== Payoff ratio ==")
print("two winning runs at 110 against an optimal of 100:", payoff_ratio([110.0, 110.0], 100.0))
print("asset/payoff fractions for the same story:", asset_and_payoff_fractions(100.0, 110.0, 100.0))

print("\n== Aggregation over a matrix of runs ==")
matrix = [[0.0, 0.2], [0.1, 0.1]]
print(f"deviations {matrix} -> grand mean {mean_deviation(matrix)}")

print("\n== Counting rates ==")
flags = [True] + [False] * 149
print(f"1 violation in 150 runs -> {rule_break_rate(flags):.2f}%")
print("wins in 3 of 4 valid runs ->", win_rate([True, True, True, False]))

print("\n== Convergence of an action path ==")
series = (50.0, 33.0, 22.0, 0.0, 0.0, 0.0)
verdict = convergence_verdict(series, epsilon=1e-6, window=2)
print(f"series {series}")
print(f"converged={verdict.converged}, settled at run index {verdict.settled_at}")
