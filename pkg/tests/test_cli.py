import json
from fractions import Fraction
from pathlib import Path

import pytest

import semilab as sl
from semilab.cli import (
    EXIT_FAILS,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    EXIT_USAGE,
    main,
    parse_env_spec,
    parse_environment,
    parse_rational,
)
from semilab.errors import SpecError

from conftest import FIXTURES

F = Fraction


# ------------------------------------------------------------------- parsing

def test_rational_parsing():
    assert parse_rational("3/4") == F(3, 4)
    assert parse_rational("7") == F(7)
    assert parse_rational(5) == F(5)
    with pytest.raises(SpecError):
        parse_rational("0.75")
    with pytest.raises(SpecError):
        parse_rational("1/0")
    with pytest.raises(SpecError):
        parse_rational([1, 2])


def test_parse_basic_environment():
    env = parse_env_spec('{"kind":"bernoulli","p":"1/3"}')
    assert env.eval(sl.FiniteString.parse("1")) == F(1, 3)


def test_parse_rejects_invalid_probability():
    with pytest.raises(SpecError):
        parse_env_spec('{"kind":"bernoulli","p":"4/3"}')


def test_parse_rejects_unknown_kind():
    with pytest.raises(SpecError) as err:
        parse_environment({"kind": "mystery"}, "$.class[0]")
    assert "$.class[0]" in str(err.value)


def test_parse_class_applies_default_weights():
    env_class, weights = parse_env_spec(
        '[{"kind":"bernoulli","p":"1/2"},{"kind":"bernoulli","p":"1/4"}]')
    assert len(env_class) == 2
    assert weights.weight(1) == F(1, 2)
    assert weights.weight(2) == F(1, 256)


def test_parse_detects_declared_class_mismatch():
    spec = {"kind": "table", "depth": 1, "declared_class": "measure",
            "values": {"": "1", "0": "1/4", "1": "1/4"}}
    with pytest.raises(SpecError):
        parse_env_spec(spec)


def test_parse_detects_node_defects():
    spec = {"kind": "table", "depth": 1,
            "values": {"": "1/2", "0": "1/2", "1": "1/2"}}
    with pytest.raises(SpecError):
        parse_env_spec(spec)


@pytest.mark.parametrize("builder", [
    lambda: sl.BernoulliEnv(F(2, 5)),
    lambda: sl.CategoricalIIDEnv([F(1, 6), F(1, 3), F(1, 2)]),
    lambda: sl.MarkovEnv(1, {(): [F(1, 2), F(1, 2)],
                             (0,): [F(1, 3), F(2, 3)],
                             (1,): [F(3, 5), F(2, 5)]}),
    lambda: sl.DeterministicEnv([1, 0], [1]),
    lambda: sl.LeakyEnv(sl.BernoulliEnv(F(1, 2)), F(1, 2)),
    lambda: sl.DecayingEnv(3),
    lambda: sl.TableEnv(1, {(): F(1, 2), (0,): F(1, 4)}),
    lambda: sl.QuasimeasureEnv(sl.LeakyEnv(sl.BernoulliEnv(F(1, 2)), F(1, 2)), 6),
    lambda: sl.MixtureEnv(
        sl.EnvClass([sl.BernoulliEnv(F(1, 2)), sl.BernoulliEnv(F(1, 4))]),
        sl.default_weights(2), sl.RAW),
])
def test_environment_specs_round_trip(builder):
    env = builder()
    clone = parse_environment(env.spec())
    for n in range(4):
        for x, _ in sl.enumerate_support(sl.uniform_measure(env.alphabet), n):
            try:
                expected = env.eval(x)
            except sl.DepthExceededError:
                continue
            assert clone.eval(x) == expected


def test_limit_and_blend_specs_round_trip(canonical_mixture):
    from semilab.counterexample import NuLimitEnv, build_mprime
    nu = NuLimitEnv(sl.FiniteString.parse("0100"), 4)
    cm = build_mprime(nu, canonical_mixture, F(1, 9))
    clone = parse_environment(cm.env.spec())
    for s in ("", "0", "01", "010", "11"):
        x = sl.FiniteString.parse(s)
        assert clone.eval(x) == cm.env.eval(x)


# --------------------------------------------------------------- subcommands

def run_cli(*args):
    return main(list(args))


def test_bound_chain_subcommand_exits_clean(capsys):
    code = run_cli("verify-hellinger-bounds",
                   "--spec", str(FIXTURES / "bern3_mix.json"), "--depth", "5")
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert {"part-i", "part-ii", "part-iii"} <= set(out)


def test_tail_subcommand_exits_clean(capsys):
    code = run_cli("markov-tail",
                   "--spec", str(FIXTURES / "bern3_mix.json"), "--depth", "5")
    assert code == EXIT_OK


def test_chain_subcommand_seeded_trials(capsys):
    code = run_cli("chain-lemma", "--spec", str(FIXTURES / "chain_trials.json"),
                   "--seed", "1")
    assert code == EXIT_OK


def test_chain_subcommand_forced_failure_exits_two(capsys):
    code = run_cli("chain-lemma", "--spec", str(FIXTURES / "chain_falsified.json"))
    assert code == EXIT_FAILS


def test_truncation_subcommand(capsys):
    code = run_cli("quasimeasure", "--spec", str(FIXTURES / "quasi_leaky.json"),
                   "--depth", "5")
    assert code == EXIT_OK


def test_posterior_comparison_subcommand_requires_seed(capsys):
    code = run_cli("w-vs-d", "--spec", str(FIXTURES / "quasi_leaky.json"),
                   "--depth", "5")
    assert code == EXIT_USAGE
    code = run_cli("w-vs-d", "--spec", str(FIXTURES / "quasi_leaky.json"),
                   "--depth", "5", "--seed", "7")
    assert code == EXIT_OK


def test_deficiency_subcommand(capsys):
    code = run_cli("deficiency", "--spec", str(FIXTURES / "bern3_mix.json"),
                   "--depth", "6", "--seed", "3")
    assert code == EXIT_OK


def test_envelope_subcommand(capsys):
    code = run_cli("leftmost-alpha",
                   "--spec", str(FIXTURES / "counterexample_canonical.json"),
                   "--depth", "16")
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["envelope"]["alpha"].startswith("0100")


def test_staged_functional_subcommand(capsys):
    code = run_cli("e2i", "--spec", str(FIXTURES / "e2i_indicator.json"),
                   "--seed", "11")
    assert code == EXIT_OK


def test_posterior_mixture_subcommand(capsys):
    code = run_cli("prop8", "--spec", str(FIXTURES / "bern3_default_weights.json"),
                   "--depth", "6")
    assert code == EXIT_OK


def test_nonconvergence_subcommand_golden_value(capsys):
    code = run_cli("counterexample",
                   "--spec", str(FIXTURES / "counterexample_canonical.json"),
                   "--depth", "16")
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["positions"][0]["mprime_posterior"] == "20/23"


def test_nonconvergence_subcommand_degenerate_class_exits_three(capsys):
    code = run_cli("counterexample",
                   "--spec", str(FIXTURES / "counterexample_poor.json"),
                   "--depth", "8")
    assert code == EXIT_INCONCLUSIVE


def test_invalid_spec_exits_one(capsys):
    code = run_cli("verify-hellinger-bounds",
                   "--spec", '{"class":[{"kind":"bernoulli","p":"4/3"}]}')
    assert code == EXIT_USAGE


def test_missing_file_exits_one(capsys):
    code = run_cli("deficiency", "--spec", "/nonexistent.json", "--seed", "1")
    assert code == EXIT_USAGE


# ------------------------------------------------------------------- outputs

def test_output_directory_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    code = run_cli("w-vs-d", "--spec", str(FIXTURES / "quasi_leaky.json"),
                   "--depth", "5", "--seed", "7", "--out", str(out))
    assert code == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "w-vs-d"
    assert manifest["outcomes"]["certified-fails"] == 0
    assert (out / "verdicts.json").exists()
    assert (out / "w-vs-d.csv").exists()


def test_plotdata_format(tmp_path):
    out = tmp_path / "run"
    run_cli("w-vs-d", "--spec", str(FIXTURES / "quasi_leaky.json"),
            "--depth", "5", "--seed", "7", "--out", str(out),
            "--format", "plotdata")
    lines = (out / "w-vs-d.plotdata").read_text().strip().split("\n")
    assert len(lines) == 5
    t, lo, hi = lines[0].split()
    assert t == "1"


def test_reruns_are_byte_identical_across_workers(tmp_path):
    payloads = {}
    for w in ("1", "2", "8"):
        out = tmp_path / f"run{w}"
        run_cli("verify-hellinger-bounds",
                "--spec", str(FIXTURES / "bern3_mix.json"),
                "--depth", "5", "--workers", w, "--out", str(out))
        payloads[w] = (out / "verdicts.json").read_bytes()
    assert payloads["1"] == payloads["2"] == payloads["8"]


def test_precision_environment_variable(monkeypatch, capsys):
    monkeypatch.setenv("SEMILAB_PRECISION", "64")
    code = run_cli("verify-hellinger-bounds",
                   "--spec", str(FIXTURES / "bern3_mix.json"), "--depth", "3")
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["part-ii"]["precision"] == 64


def test_precision_flag_overrides_environment(monkeypatch, capsys):
    monkeypatch.setenv("SEMILAB_PRECISION", "64")
    code = run_cli("verify-hellinger-bounds",
                   "--spec", str(FIXTURES / "bern3_mix.json"),
                   "--depth", "3", "--precision", "160")
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["part-ii"]["precision"] == 160
