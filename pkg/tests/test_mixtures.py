from fractions import Fraction

import pytest

import semilab as sl
from semilab.errors import (
    ApproximableNotMeasureError,
    NotDominatedError,
    SemilabError,
)

F = Fraction


# ------------------------------------------------------------------ weights

def test_weights_are_positive_and_substochastic():
    with pytest.raises(ValueError):
        sl.WeightScheme((F(0), F(1, 2)))
    with pytest.raises(ValueError):
        sl.WeightScheme((F(2, 3), F(2, 3)))


def test_default_weight_values():
    ws = sl.default_weights(3)
    assert ws.weight(1) == F(1, 2)
    assert ws.weight(2) == F(1, 2 ** 6 * 4)
    assert ws.weight(3) == F(1, 3 ** 6 * 8)
    assert sum(ws.weights) <= 1


def test_weight_indexing_is_one_based():
    ws = sl.default_weights(2)
    with pytest.raises(IndexError):
        ws.weight(0)
    with pytest.raises(IndexError):
        ws.weight(3)


# ---------------------------------------------------------------- env class

def test_measure_membership_uses_validation_not_declaration(quasi_class):
    assert quasi_class.is_measure(1)
    assert not quasi_class.is_measure(2)
    assert quasi_class.measure_indices() == (1,)


def test_class_requires_shared_alphabet():
    with pytest.raises(SemilabError):
        sl.EnvClass([sl.BernoulliEnv(F(1, 2)),
                     sl.CategoricalIIDEnv([F(1, 3)] * 3)])


# ----------------------------------------------------------- quasimeasures

def test_quasimeasure_keeps_measures_untouched():
    q = sl.quasimeasure_transform(sl.BernoulliEnv(F(1, 2)), depth_cap=8)
    assert q.cutoff_depth() is None
    assert q.eval(sl.FiniteString.parse("0101")) == F(1, 16)


def test_quasimeasure_cutoff_for_leaking_mass():
    leaky = sl.LeakyEnv(sl.BernoulliEnv(F(1, 2)), F(1, 2))
    q = sl.quasimeasure_transform(leaky, depth_cap=8)
    # depth-n total mass is 2^-n; survives only while 2^-n > 1 - 1/n
    assert q.alive_at(0)
    assert q.alive_at(1)
    assert q.cutoff_depth() == 2
    assert q.eval(sl.FiniteString.parse("0")) == F(1, 4)
    assert q.eval(sl.FiniteString.parse("00")) == 0


def test_quasimeasure_cutoff_is_monotone():
    leaky = sl.LeakyEnv(sl.BernoulliEnv(F(1, 2)), F(3, 4))
    q = sl.quasimeasure_transform(leaky, depth_cap=12)
    cut = q.cutoff_depth()
    assert cut is not None
    for n in range(cut, 13):
        assert not q.alive_at(n)
    for n in range(0, cut):
        assert q.alive_at(n)


def test_quasimeasure_never_exceeds_base():
    leaky = sl.LeakyEnv(sl.BernoulliEnv(F(1, 3)), F(2, 3))
    q = sl.quasimeasure_transform(leaky, depth_cap=10)
    for n in range(5):
        for x, m in sl.enumerate_support(sl.uniform_measure(), n):
            assert q.eval(x) <= leaky.eval(x)


# ------------------------------------------------------------------ mixture

def test_raw_mixture_is_the_weighted_sum(bern3_class, bern3_uniform_weights):
    mix = sl.MixtureEnv(bern3_class, bern3_uniform_weights, sl.RAW)
    x = sl.FiniteString.parse("011")
    expected = sum(F(1, 3) * bern3_class.env(i).eval(x) for i in (1, 2, 3))
    assert mix.eval(x) == expected
    assert mix.declared_class == sl.MEASURE


def test_mixture_dominates_components(bern3_class, bern3_uniform_weights):
    mix = sl.MixtureEnv(bern3_class, bern3_uniform_weights, sl.RAW)
    for i in (1, 2, 3):
        w = sl.dominance_constant(mix, i)
        assert w == F(1, 3)
        from semilab.divergence import verify_dominance
        assert verify_dominance(mix, bern3_class.env(i), w, 5)


def test_measures_only_mixture_drops_non_measures(quasi_class):
    ws = sl.default_weights(2)
    d = sl.MixtureEnv(quasi_class, ws, sl.MEASURES_ONLY)
    assert d.membership() == (1,)
    x = sl.FiniteString.parse("01")
    assert d.eval(x) == ws.weight(1) * F(1, 4)
    with pytest.raises(NotDominatedError):
        sl.dominance_constant(d, 2)


def test_quasi_mixture_equals_measure_mixture_past_cutoff(quasi_class):
    ws = sl.default_weights(2)
    w_mix = sl.MixtureEnv(quasi_class, ws, sl.QUASI, quasi_depth_cap=8)
    d_mix = sl.MixtureEnv(quasi_class, ws, sl.MEASURES_ONLY)
    for n in range(2, 6):
        for x, _ in sl.enumerate_support(sl.uniform_measure(), n):
            assert w_mix.eval(x) == d_mix.eval(x)
    # below the cutoff they differ
    assert w_mix.eval(sl.FiniteString.parse("0")) != d_mix.eval(sl.FiniteString.parse("0"))


def test_first_live_truncated_component_index(quasi_class):
    ws = sl.default_weights(2)
    w_mix = sl.MixtureEnv(quasi_class, ws, sl.QUASI, quasi_depth_cap=8)
    assert sl.k_x(w_mix, sl.FiniteString.parse("0")) == 2
    assert sl.k_x(w_mix, sl.FiniteString.parse("00")) is None
    with pytest.raises(SemilabError):
        sl.k_x(sl.MixtureEnv(quasi_class, ws, sl.RAW), sl.FiniteString.parse("0"))


def test_normalized_measures_only_mixture_is_a_measure(bern3_class):
    ws = sl.default_weights(3)
    d_hat = sl.MixtureEnv(bern3_class, ws, sl.NORMALIZED_MEASURES_ONLY)
    assert d_hat.eval(sl.FiniteString.parse("")) == 1
    assert sl.validate(d_hat, 4).is_measure_to_depth
    # normalization divides by the weight total
    x = sl.FiniteString.parse("01")
    raw = sl.MixtureEnv(bern3_class, ws, sl.MEASURES_ONLY)
    assert d_hat.eval(x) == raw.eval(x) / sum(ws.weights)


def test_truncated_mixture_prefix_k(bern3_class):
    ws = sl.default_weights(3)
    d2 = sl.MixtureEnv(bern3_class, ws, sl.MEASURES_ONLY, k=2)
    assert d2.membership() == (1, 2)
    x = sl.FiniteString.parse("1")
    expected = ws.weight(1) * F(1, 4) + ws.weight(2) * F(1, 2)
    assert d2.eval(x) == expected


def test_mixture_cursor_agrees_with_direct_eval(bern3_class, bern3_uniform_weights):
    mix = sl.MixtureEnv(bern3_class, bern3_uniform_weights, sl.RAW)
    cursor = mix.cursor()
    path = (0, 1, 1, 0, 1)
    for t, a in enumerate(path):
        prefix = sl.FiniteString(sl.BINARY, path[:t])
        assert cursor.row() == mix.posterior(prefix)
        cursor.step(a)
    assert cursor.mass == mix.eval(sl.FiniteString(sl.BINARY, path))


def test_normalized_mixture_cursor_rows(bern3_class):
    ws = sl.default_weights(3)
    d_hat = sl.MixtureEnv(bern3_class, ws, sl.NORMALIZED_MEASURES_ONLY, k=2)
    cursor = d_hat.cursor()
    path = (1, 0, 1)
    for t, a in enumerate(path):
        prefix = sl.FiniteString(sl.BINARY, path[:t])
        assert cursor.row() == d_hat.posterior(prefix)
        cursor.step(a)


# ------------------------------------------------------------ normalization

def test_normalize_rescales_total_mass(quasi_class):
    ws = sl.default_weights(2)
    mix = sl.MixtureEnv(quasi_class, ws, sl.MEASURES_ONLY)
    norm = sl.normalize(mix)
    assert norm.eval(sl.FiniteString.parse("")) == 1
    assert sl.validate(norm, 4).is_measure_to_depth


def test_normalize_refuses_live_truncated_strict_component(quasi_class):
    ws = sl.default_weights(2)
    w_mix = sl.MixtureEnv(quasi_class, ws, sl.QUASI, quasi_depth_cap=8)
    with pytest.raises(ApproximableNotMeasureError):
        sl.normalize(w_mix)


# ---------------------------------------------------------- staged mixtures

def test_partial_sum_stages_increase_to_the_mixture(bern3_class, bern3_uniform_weights):
    mix = sl.MixtureEnv(bern3_class, bern3_uniform_weights, sl.RAW)
    stages = sl.StageApproximation(mix, rule=sl.PARTIAL_SUM)
    x = sl.FiniteString.parse("010")
    values = [stages.stage_eval(t, x) for t in (1, 2, 3)]
    assert values[0] <= values[1] <= values[2]
    assert values[2] == mix.eval(x)
    assert stages.final_stage == 3


def test_exact_stage_rule_equals_target(bern3_class, bern3_uniform_weights):
    mix = sl.MixtureEnv(bern3_class, bern3_uniform_weights, sl.RAW)
    stages = sl.StageApproximation(mix)
    x = sl.FiniteString.parse("11")
    assert sl.stage_eval(stages, 1, x) == mix.eval(x)
