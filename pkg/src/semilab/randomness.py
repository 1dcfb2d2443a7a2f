"""Randomness-deficiency traces, the leftmost-random construction, and the
expected-to-individual bound machinery, all relative to an explicit finite
reference mixture.  Nothing here claims absolute algorithmic randomness: the
deficiency is always measured against the configured mixture, whose explicit
weights stand in for the incomputable complexity-based ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import divergence
from .envcore import (
    Environment,
    FiniteString,
    MEASURE,
    STRICT_SEMIMEASURE,
    ZERO,
)
from .errors import (
    HypothesisFailedError,
    InvalidK0Error,
    NotDominatedError,
    SemilabError,
    UndefinedPosteriorError,
)
from .intervals import (
    CERTIFIED_FAILS,
    CERTIFIED_HOLDS,
    DEFAULT_PRECISION,
    Verdict,
    compare_le,
    from_fraction,
    interval_str,
    iv,
    precision,
)
from .mixtures import (
    NORMALIZED_MEASURES_ONLY,
    RAW,
    EnvClass,
    MixtureEnv,
    WeightScheme,
)

DEFAULT_CEILING = Fraction(2 ** 64)


@dataclass
class DeficiencyTrace:
    """Exact prefix ratios M_ref/mu with their running supremum."""

    prefix_lengths: list[int]
    ratios: list[Fraction]
    log2_bounds: list[tuple[str, str]]
    sup_ratio: Fraction
    d_bounds: tuple[str, str]
    diverging: bool
    ceiling: Fraction

    def to_csv(self) -> str:
        lines = ["n,ratio_num,ratio_den,log2_lo,log2_hi"]
        for i, n in enumerate(self.prefix_lengths):
            r = self.ratios[i]
            lo, hi = self.log2_bounds[i]
            lines.append(f"{n},{r.numerator},{r.denominator},{lo},{hi}")
        return "\n".join(lines) + "\n"


def _log2_interval(q: Fraction):
    return iv.log(from_fraction(q)) / iv.log(iv.mpf(2))


def deficiency_trace(m_ref: Environment, mu: Environment, omega: FiniteString,
                     n: int, precision_bits: int = DEFAULT_PRECISION,
                     ceiling: Fraction = DEFAULT_CEILING) -> DeficiencyTrace:
    """Ratios M_ref(omega_{1:k}) / mu(omega_{1:k}) for k = 0..n, exactly.

    The supremum d is reported as a log2 enclosure of the exact maximal
    ratio; the diverging flag marks ratios beyond the configured ceiling.
    """
    lengths, ratios, logs = [], [], []
    sup_ratio = None
    with precision(precision_bits):
        for k in range(n + 1):
            prefix = omega.prefix(k)
            mu_mass = mu.eval(prefix)
            if mu_mass == 0:
                raise UndefinedPosteriorError(f"mu vanishes on prefix of length {k}")
            ratio = m_ref.eval(prefix) / mu_mass
            lengths.append(k)
            ratios.append(ratio)
            logs.append(interval_str(_log2_interval(ratio)) if ratio > 0 else ("-inf", "-inf"))
            sup_ratio = ratio if sup_ratio is None else max(sup_ratio, ratio)
        d_bounds = (interval_str(_log2_interval(sup_ratio))
                    if sup_ratio > 0 else ("-inf", "-inf"))
    return DeficiencyTrace(
        prefix_lengths=lengths,
        ratios=ratios,
        log2_bounds=logs,
        sup_ratio=sup_ratio,
        d_bounds=d_bounds,
        diverging=sup_ratio > ceiling,
        ceiling=ceiling,
    )


def leftmost_random(m: Environment, n: int,
                    verify_postcondition: bool = True) -> FiniteString:
    """The leftmost sequence alpha with M(alpha_{1:k}) <= 2^{-k} at every k.

    alpha_k = 0 when M(alpha_{<k} 0) <= 2^{-k} (ties take the 0-branch),
    else alpha_k = 1; comparisons are exact rationals.
    """
    if m.alphabet.size != 2:
        raise SemilabError("leftmost-random construction requires binary alphabet")
    symbols: tuple[int, ...] = ()
    for k in range(1, n + 1):
        bound = Fraction(1, 2 ** k)
        if m._mass(symbols + (0,)) <= bound:
            symbols = symbols + (0,)
        else:
            symbols = symbols + (1,)
        if verify_postcondition and m._mass(symbols) > bound:
            raise SemilabError(
                f"postcondition M(alpha_{{1:{k}}}) <= 2^-{k} failed; "
                "input is not a semimeasure")
    return FiniteString(m.alphabet, symbols)


def _exact_verdict(lhs: Fraction, rhs: Fraction) -> Verdict:
    outcome = CERTIFIED_HOLDS if lhs <= rhs else CERTIFIED_FAILS
    return Verdict(
        outcome,
        f"{lhs.numerator}/{lhs.denominator}", f"{lhs.numerator}/{lhs.denominator}",
        f"{rhs.numerator}/{rhs.denominator}", f"{rhs.numerator}/{rhs.denominator}",
        0,
    )


class EnumerableFunctional:
    """Stagewise nonnegative functional F_n(omega_{1:n}) with tolerances
    eps_n decreasing to a limit eps."""

    eps_limit: Fraction

    def value(self, n: int, symbols: tuple[int, ...]) -> Fraction:
        raise NotImplementedError

    def eps(self, n: int) -> Fraction:
        raise NotImplementedError


class ConstantFunctional(EnumerableFunctional):
    """F_n identically equal to eps_n."""

    def __init__(self, eps_limit: Fraction):
        self.eps_limit = Fraction(eps_limit)

    def eps(self, n: int) -> Fraction:
        return self.eps_limit

    def value(self, n: int, symbols: tuple[int, ...]) -> Fraction:
        return self.eps_limit


class IndicatorFunctional(EnumerableFunctional):
    """F_n(x) = 2^n eps_n [x = 0^n] over a binary base measure."""

    def __init__(self, eps_limit: Fraction):
        self.eps_limit = Fraction(eps_limit)

    def eps(self, n: int) -> Fraction:
        if n == 0:
            return 2 * self.eps_limit
        return self.eps_limit * (1 + Fraction(1, n))

    def value(self, n: int, symbols: tuple[int, ...]) -> Fraction:
        if any(s != 0 for s in symbols):
            return ZERO
        return Fraction(2 ** n) * self.eps(n)


class MuBarEnv(Environment):
    """The stage-n semimeasure produced by the expected-to-individual
    construction: an explicit prefix table to depth n, zero beyond."""

    def __init__(self, values: dict[tuple[int, ...], Fraction], depth: int,
                 alphabet, stage: int):
        self.values = values
        self.depth = depth
        self.alphabet = alphabet
        self.stage = stage
        self.declared_class = STRICT_SEMIMEASURE

    def _mass(self, symbols: tuple[int, ...]) -> Fraction:
        if len(symbols) > self.depth:
            return ZERO
        return self.values.get(symbols, ZERO)

    def spec(self) -> dict:
        return {
            "kind": "derived",
            "derived": "mubar",
            "stage": self.stage,
            "depth": self.depth,
            "alphabet_size": self.alphabet.size,
            "values": {
                "".join(map(str, k)): f"{v.numerator}/{v.denominator}"
                for k, v in sorted(self.values.items()) if v != 0
            },
        }


def e2i_build_mubar(mu: Environment, f: EnumerableFunctional, n: int) -> MuBarEnv:
    """mubar_n(x_{1:k}) = eps_n^{-1} sum over extensions of mu * F_n.

    The hypothesis E_mu[F_n] <= eps_n is checked exactly by enumeration
    before the table is built.
    """
    if mu.declared_class != MEASURE:
        raise SemilabError("the construction requires a measure")
    eps_n = f.eps(n)
    if eps_n <= 0:
        raise ValueError("eps_n must be positive")
    # leaf layer
    values: dict[tuple[int, ...], Fraction] = {}
    expectation = ZERO

    def rec(symbols: tuple[int, ...], mass: Fraction) -> Fraction:
        nonlocal expectation
        if len(symbols) == n:
            term = mass * f.value(n, symbols)
            expectation += term
            v = term / eps_n
        else:
            v = ZERO
            for a in mu.alphabet.symbols:
                child = mu._mass(symbols + (a,))
                if child != 0:
                    v += rec(symbols + (a,), child)
        if v != 0:
            values[symbols] = v
        return v

    rec((), mu._mass(()))
    if expectation > eps_n:
        raise HypothesisFailedError(
            f"E_mu[F_n] = {expectation} exceeds eps_n = {eps_n}")
    return MuBarEnv(values, n, mu.alphabet, n)


@dataclass
class E2IBoundReport:
    ratio_verdict: Verdict
    deficiency_verdict: Verdict
    f_value: Fraction
    eps_n: Fraction
    weight: Fraction
    ratio: Fraction
    sup_ratio: Fraction


def e2i_individual_bound(m_ref_ext: MixtureEnv, f: EnumerableFunctional,
                         mu: Environment, omega: FiniteString,
                         n: int) -> E2IBoundReport:
    """Certify F_n(omega) <= eps_n w^{-1} M_ref(omega_{1:n}) / mu(omega_{1:n}).

    w is the explicit weight of the registered stage-n table environment in
    the extended reference mixture (the stand-in for its complexity weight);
    the supremum-ratio form of the bound is certified alongside.
    """
    index = None
    for i in range(1, len(m_ref_ext.env_class) + 1):
        env = m_ref_ext.env_class.env(i)
        if isinstance(env, MuBarEnv) and env.stage == n:
            index = i
            break
    if index is None or index not in m_ref_ext.membership():
        raise NotDominatedError("stage-n table environment not registered in the mixture")
    w = m_ref_ext.weights.weight(index)
    prefix = omega.prefix(n)
    mu_mass = mu.eval(prefix)
    if mu_mass == 0:
        raise UndefinedPosteriorError("omega outside mu-support")
    f_val = f.value(n, prefix.symbols)
    eps_n = f.eps(n)
    ratio = m_ref_ext.eval(prefix) / mu_mass
    sup_ratio = max(
        m_ref_ext.eval(omega.prefix(k)) / mu.eval(omega.prefix(k))
        for k in range(n + 1)
    )
    return E2IBoundReport(
        ratio_verdict=_exact_verdict(f_val, eps_n / w * ratio),
        deficiency_verdict=_exact_verdict(f_val, eps_n / w * sup_ratio),
        f_value=f_val,
        eps_n=eps_n,
        weight=w,
        ratio=ratio,
        sup_ratio=sup_ratio,
    )


@dataclass
class Prop8Report:
    k0: int
    sum_h_mu: tuple[str, str]
    sum_h_d: tuple[str, str]
    deficiency: DeficiencyTrace
    trace_mu: divergence.HellingerTrace
    trace_d: divergence.HellingerTrace


def prop8_trace(env_class: EnvClass, weights: WeightScheme, k0: int,
                omega: FiniteString, n: int,
                precision_bits: int = DEFAULT_PRECISION) -> Prop8Report:
    """Hellinger sums of the normalized k0-mixture against mu and against the
    normalized full measures-only mixture, paired with the deficiency trace.

    Purely diagnostic pairing: with explicit weights the complexity-based
    constants of the original statement do not transfer, so nothing about
    their exact values is asserted here.
    """
    if not env_class.is_measure(k0):
        raise InvalidK0Error(f"index {k0} is not a validated measure")
    mu = env_class.env(k0)
    delta_hat = MixtureEnv(env_class, weights, NORMALIZED_MEASURES_ONLY, k=k0)
    d_hat = MixtureEnv(env_class, weights, NORMALIZED_MEASURES_ONLY)
    m_ref = MixtureEnv(env_class, weights, RAW)
    trace_mu = divergence.hellinger_trace(delta_hat, mu, omega, n, precision_bits)
    trace_d = divergence.hellinger_trace(delta_hat, d_hat, omega, n, precision_bits)
    deficiency = deficiency_trace(m_ref, mu, omega, n, precision_bits)
    return Prop8Report(
        k0=k0,
        sum_h_mu=interval_str(trace_mu.cumulative[-1]) if trace_mu.cumulative else ("0", "0"),
        sum_h_d=interval_str(trace_d.cumulative[-1]) if trace_d.cumulative else ("0", "0"),
        deficiency=deficiency,
        trace_mu=trace_mu,
        trace_d=trace_d,
    )


def prop8_expected_bound(env_class: EnvClass, weights: WeightScheme, k0: int,
                         n: int, precision_bits: int = DEFAULT_PRECISION,
                         workers: int = 1) -> Verdict:
    """Certify E_mu[exp(half sum_{t<=n} h_t(delta_hat_k0, mu))] <= eps_k0^{-1/2}."""
    if not env_class.is_measure(k0):
        raise InvalidK0Error(f"index {k0} is not a validated measure")
    mu = env_class.env(k0)
    delta_hat = MixtureEnv(env_class, weights, NORMALIZED_MEASURES_ONLY, k=k0)
    eps_k0 = weights.weight(k0)
    with precision(precision_bits):
        lhs = divergence.expected_exp_half_sum(
            delta_hat, mu, n, precision_bits=precision_bits, workers=workers)
        rhs = iv.sqrt(1 / from_fraction(eps_k0))
        return compare_le(lhs, rhs, precision_bits)


def delta_hat_ratio_check(env_class: EnvClass, weights: WeightScheme, k: int,
                          depth: int) -> Verdict:
    """Exact check of delta_hat_{k-1}(x)/delta_hat_k(x) <= 1 + eps_k/eps_O
    on every string to the given depth, O the minimal measure index."""
    if k < 2:
        raise ValueError("k must be >= 2")
    members_prev = env_class.measure_indices(k - 1)
    if not members_prev:
        raise SemilabError("J_{k-1} is empty")
    o = members_prev[0]
    bound = 1 + weights.weight(k) / weights.weight(o)
    prev = MixtureEnv(env_class, weights, NORMALIZED_MEASURES_ONLY, k=k - 1)
    curr = MixtureEnv(env_class, weights, NORMALIZED_MEASURES_ONLY, k=k)
    worst = ZERO

    def rec(symbols: tuple[int, ...]):
        nonlocal worst
        c = curr._mass(symbols)
        if c != 0:
            worst = max(worst, prev._mass(symbols) / c)
        if len(symbols) == depth:
            return
        for a in env_class.alphabet.symbols:
            rec(symbols + (a,))

    rec(())
    return _exact_verdict(worst, bound)
