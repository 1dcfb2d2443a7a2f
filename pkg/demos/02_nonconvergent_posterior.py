"""
Build a predictor whose posterior provably fails to converge
============================================================

Mixing a carefully built flat semimeasure nu into a Bayes mixture M gives a
universal predictor M' = (1-gamma) nu + gamma M whose next-symbol posterior
stays at least 2/3 at positions where the observed sequence alpha reads "01",
even though the data-generating measure (the uniform measure) assigns those
symbols probability 1/2. Every step of the construction is exact.

Run:  python3 demos/02_nonconvergent_posterior.py
"""

from fractions import Fraction

from semilab import (
    DeterministicEnv,
    EnvClass,
    FiniteString,
    MixtureEnv,
    RAW,
    StageApproximation,
    WeightScheme,
    uniform_measure,
)
from semilab.counterexample import build_mprime, nu_limit, verify_nonconvergence
from semilab.randomness import leftmost_random

F = Fraction

# a three-member class: the uniform measure plus two point masses whose
# weight forces the leftmost sub-envelope sequence to read "01" early on
members = EnvClass([
    uniform_measure(),
    DeterministicEnv([], [0]),        # all zeros
    DeterministicEnv([1], [0]),       # 1 then all zeros
])
weights = WeightScheme((F(1, 2), F(1, 4), F(1, 8)))
mixture = MixtureEnv(members, weights, RAW)

depth = 16
alpha = leftmost_random(mixture, depth)
print("leftmost sequence under the 2^-n envelope:", alpha)

# freeze the stagewise approximations into the limiting flat semimeasure
nu = nu_limit(StageApproximation(mixture), depth)
print("nu(empty) =", nu.eval(FiniteString.empty()))

gamma = F(1, 9)
contaminated = build_mprime(nu, mixture, gamma)
print("posterior lower bound (1-gamma)/(1+3gamma) =", contaminated.posterior_bound)

report = verify_nonconvergence(contaminated, uniform_measure(), alpha, depth - 1)
print()
for pos in report.positions:
    print(f"position n={pos.n}: alpha reads 01,",
          f"M'(0 | prefix) = {pos.mprime_posterior} >= {pos.bound} > 1/2,",
          f"gap above 1/2 is {pos.gap}")
print()
print("all positions certified:", report.all_certified)
