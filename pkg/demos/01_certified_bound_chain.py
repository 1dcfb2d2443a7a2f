"""
Certify the expected-divergence bound chain for a small Bayes mixture
=====================================================================

A Bayes mixture over three coins predicts almost as well as the true coin.
This demo certifies the whole chain of inequalities quantifying "almost":
the expected squared-root deviation is below the expected Hellinger sum,
which is below twice the log of an exponential moment, which is below the
log of the inverse prior weight.

Run:  python3 demos/01_certified_bound_chain.py
"""

from fractions import Fraction

from semilab import BernoulliEnv, EnvClass, MixtureEnv, RAW, WeightScheme
from semilab.divergence import expected_exp_half_sum, expected_hellinger_sums
from semilab.intervals import compare_le, from_fraction, interval_str, iv, precision

F = Fraction

# the environment class: three coins, uniform prior
coins = EnvClass([BernoulliEnv(F(1, 4)), BernoulliEnv(F(1, 2)), BernoulliEnv(F(3, 4))])
weights = WeightScheme((F(1, 3), F(1, 3), F(1, 3)))
mixture = MixtureEnv(coins, weights, RAW)

# the truth is the fair coin; its prior weight is the dominance constant
mu = coins.env(2)
w = F(1, 3)
horizon = 10
bits = 256

with precision(bits):
    sums = expected_hellinger_sums(mixture, mu, horizon, bits)
    moment = expected_exp_half_sum(mixture, mu, horizon, precision_bits=bits)
    two_ln = 2 * iv.log(moment)

    print(f"horizon n = {horizon}, precision = {bits} bits")
    print("E[sum (sqrt(ratio)-1)^2]  in", interval_str(sums["sqrt_ratio_sum"]))
    print("E[sum h_t]                in", interval_str(sums["hellinger_sum"]))
    print("2 ln E[exp(half sum h_t)] in", interval_str(two_ln))
    print("ln(1/w)                   in", interval_str(iv.log(1 / from_fraction(w))))
    print()

    # link 1 is decided exactly: the two sides differ by the off-support
    # mass the mixture places where mu places none, a nonnegative rational
    print("link 1:", sums["part_i"].outcome,
          " (exact excess =", sums["off_support_excess"], ")")
    print("link 2:", compare_le(sums["hellinger_sum"], two_ln, bits).outcome)
    print("link 3:", compare_le(two_ln, iv.log(1 / from_fraction(w)), bits).outcome)
