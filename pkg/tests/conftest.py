import sys
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import semilab as sl

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture
def bern3_class():
    return sl.EnvClass([
        sl.BernoulliEnv(Fraction(1, 4)),
        sl.BernoulliEnv(Fraction(1, 2)),
        sl.BernoulliEnv(Fraction(3, 4)),
    ])


@pytest.fixture
def bern3_uniform_weights():
    return sl.WeightScheme((Fraction(1, 3),) * 3)


@pytest.fixture
def bern3_mixture(bern3_class, bern3_uniform_weights):
    return sl.MixtureEnv(bern3_class, bern3_uniform_weights, sl.RAW)


@pytest.fixture
def canonical_class():
    return sl.EnvClass([
        sl.uniform_measure(),
        sl.DeterministicEnv([], [0]),
        sl.DeterministicEnv([1], [0]),
    ])


@pytest.fixture
def canonical_weights():
    return sl.WeightScheme((Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)))


@pytest.fixture
def canonical_mixture(canonical_class, canonical_weights):
    return sl.MixtureEnv(canonical_class, canonical_weights, sl.RAW)


@pytest.fixture
def quasi_class():
    return sl.EnvClass([
        sl.BernoulliEnv(Fraction(1, 2)),
        sl.LeakyEnv(sl.BernoulliEnv(Fraction(1, 2)), Fraction(1, 2)),
    ])
