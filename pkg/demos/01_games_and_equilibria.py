"""A guided tour of the two games and their equilibrium oracles.

Run with: python demos/01_games_and_equilibria.py
"""

from fractions import Fraction

from arena import (
    ActionProfile,
    AuctionParams,
    BeautyContestParams,
    GameKind,
    GameSpec,
    iterated_elimination,
    nash_profile,
    ne_payoffs,
    resolve_auction,
    resolve_beauty_contest,
)

print("== Guessing contest ==")
params = BeautyContestParams(lower=0.0, upper=10.0, multiplier=Fraction(2, 3), prize=1.0)
spec = GameSpec(GameKind.BEAUTY_CONTEST, 5, bc=params)
print(f"interval [0, {params.upper}], target multiplier {params.multiplier}")
print("equilibrium profile:", nash_profile(spec))
print("equilibrium payoffs (prize split five ways):", ne_payoffs(spec))

# Four naive players at the top of the range against one equilibrium player:
# the target lands nearer the crowd, so playing 'perfectly' loses.
profile = ActionProfile((10, 10, 10, 10, 0))
result = resolve_beauty_contest(params, profile)
print(f"\nactions {profile.actions} -> target {result.target:.4f}")
print(f"winners: seats {result.winners}, payoffs {result.payoffs}")

print("\n== Why the equilibrium is 0: iterated elimination ==")
for upper in (10.0, 100.0):
    survivors = iterated_elimination(BeautyContestParams(upper=upper), grid_step=1.0)
    print(f"grid [0..{upper:.0f}] step 1 survives as {survivors}")

print("\n== Sealed-bid second-price auction ==")
auction = AuctionParams(assets=(100.0, 100.0, 100.0), private_values=(60.0, 50.0, 40.0))
print("private values:", auction.private_values, "| assets:", auction.assets)
truthful = resolve_auction(auction, ActionProfile(auction.private_values))
print(f"truthful bids -> winner seat {truthful.winners[0]} pays {truthful.price_paid}")
print(f"final assets: {truthful.payoffs}  (winner ends at 110 = 100 - 50 + 60)")

overbid = resolve_auction(auction, ActionProfile((60.0, 65.0, 40.0)))
print(f"\nseat 1 overbids 65 -> wins at {overbid.price_paid}, final assets {overbid.payoffs}")
print("winning can be unprofitable: seat 1 ends below its original 100 units")
